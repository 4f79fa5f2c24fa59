from pathlib import Path

from cvarselect.repositories.uow import UnitOfWork
from cvarselect.services.experiments import (
    BaseExperimentService,
    BaseGenerateService,
    CoverageService,
    GenerateService,
    ModOfflineService,
    OtaCompareService,
    SolveService,
)


# offline studies
def get_mod_offline_service(*, root: Path) -> BaseExperimentService:
    return ModOfflineService(uow=UnitOfWork(root=root))


def get_coverage_service(*, root: Path) -> BaseExperimentService:
    return CoverageService(uow=UnitOfWork(root=root))


# street network comparison
def get_ota_compare_service(*, root: Path) -> BaseExperimentService:
    return OtaCompareService(uow=UnitOfWork(root=root))


# instance files
def get_solve_service(*, root: Path) -> BaseExperimentService:
    return SolveService(uow=UnitOfWork(root=root))


def get_generate_service(*, root: Path) -> BaseGenerateService:
    return GenerateService(uow=UnitOfWork(root=root))
