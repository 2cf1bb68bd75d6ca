from lazydep.cli import run

run()
