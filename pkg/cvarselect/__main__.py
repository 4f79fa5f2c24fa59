from cvarselect.main import cli

cli(prog_name="cvarselect")
