class ParameterException(Exception):
    pass


class ConfigurationException(Exception):
    pass


class InvalidElementException(Exception):
    pass


class MatroidViolationException(Exception):
    pass


class ZeroSingletonException(Exception):
    pass


class EmptyInputException(Exception):
    pass


class EvaluationException(Exception):
    pass


class InstanceTooLargeException(Exception):
    pass


class GenerationException(Exception):
    pass


class SchemaException(Exception):
    pass


class StorageException(Exception):
    pass


class UnreachableException(Exception):
    pass


class SimulationGuardException(Exception):
    pass
