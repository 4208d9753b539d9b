from typing import List

from cleo.application import Application
from cleo.commands.command import Command

from epcritical import __version__

from epcritical.commands.classify import ClassifyCommand
from epcritical.commands.phase import PhaseCommand
from epcritical.commands.simulate import SimulateCommand
from epcritical.commands.sweep import SweepCommand
from epcritical.commands.verify import VerifyCommand


# ============================================
#           EpCriticalApplication
# ============================================
class EpCriticalApplication(Application):
    """
    The CLI object.
    """

    # -----
    # constructor
    # -----
    def __init__(self) -> None:
        super().__init__("ep-critical", __version__)

        for command in self._get_commands():
            self.add(command())

    # -----
    # _get_commands
    # -----
    def _get_commands(self) -> List[type[Command]]:
        """
        Helper method for telling the CLI about the commands available to
        it.

        Returns
        -------
        commandList : List[type[Command]]
            A list of commands available to the CLI.
        """
        commandList = [
            ClassifyCommand,
            PhaseCommand,
            SimulateCommand,
            SweepCommand,
            VerifyCommand,
        ]

        return commandList
