import logging
import sys

from src.cli_setup import CLISetup
from src.command_handlers import CommandHandlers
from src.constants import EXIT_OK, TOOLKIT_NAME, TOOLKIT_VERSION
from src.data_management import DataManagement
from src.errors import SpacingToolkitError
from src.utils import setup_logging

# Initialize logging
setup_logging()
logger = logging.getLogger(__name__)


class SpacingToolkitApp:
    def __init__(self, stdout=None):
        logger.debug(f"Initializing {TOOLKIT_NAME} {TOOLKIT_VERSION}")
        self.stdout = stdout or sys.stdout
        self.config = None

        # Initialize helpers
        self.data = DataManagement(self)
        self.cli = CLISetup(self)
        self.handlers = CommandHandlers(self)
        self.cli.build_parser()

    def run(self, argv):
        """Parse argv, run one command and return its exit code"""
        args = self.cli.parse(argv)
        setup_logging(args.log_level, args.log_dir)
        self.config = self.cli.job_config(args)
        logger.info(f"Running {self.config.command}")
        logger.debug(f"Resolved settings: {self.config.to_dict()}")
        handler = getattr(self.handlers, args.handler)
        return handler(args)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        app = SpacingToolkitApp()
        return app.run(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 after --help/--version
        return e.code if isinstance(e.code, int) else EXIT_OK
    except SpacingToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.critical(f"Unhandled exception: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
