import os

from colorama import Fore, Style, init

init(autoreset=True)


class ForegroundColor:
    if os.name == "nt":
        RESET = Style.RESET_ALL
        RED = Fore.LIGHTRED_EX
        GREEN = Fore.LIGHTGREEN_EX
        YELLOW = Fore.LIGHTYELLOW_EX
        BLUE = Fore.LIGHTBLUE_EX
        MAGENTA = Fore.LIGHTMAGENTA_EX
        CYAN = Fore.LIGHTCYAN_EX
        DWHITE = Fore.WHITE  # Deep white (not distinct in colorama)
        FWHITE = Fore.WHITE  # Faint white (not distinct in colorama)
    else:
        RESET = "\033[0m"  # Reset to default text color
        RED = "\033[91m"
        GREEN = "\033[92m"
        YELLOW = "\033[93m"
        BLUE = "\033[94m"
        MAGENTA = "\033[95m"
        CYAN = "\033[96m"
        DWHITE = "\033[1;97m"  # Deep white
        FWHITE = "\033[2;97m"  # Faint white


fg = ForegroundColor()
rs = fg.RESET

# Colour per run status / log level name
STATUS_COLORS = {
    "reached_goal": fg.GREEN,
    "infeasible": fg.RED,
    "timeout": fg.YELLOW,
    "DEBUG": fg.FWHITE,
    "INFO": fg.CYAN,
    "WARNING": fg.YELLOW,
    "ERROR": fg.RED,
    "CRITICAL": fg.MAGENTA,
}


def paint(text: str, key: str) -> str:
    """Wrap text in the colour registered for key (no colour when unknown)."""
    color = STATUS_COLORS.get(key)
    if color is None:
        return text
    return f"{color}{text}{rs}"
