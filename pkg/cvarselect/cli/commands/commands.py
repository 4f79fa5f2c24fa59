from cvarselect.cli.commands.experiments import coverage, mod_offline, ota_compare
from cvarselect.cli.commands.generate import gen_city, gen_instance
from cvarselect.cli.commands.solve import solve

commands = [mod_offline, coverage, ota_compare, solve, gen_instance, gen_city]
