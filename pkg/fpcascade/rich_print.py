import logging
import os

import pandas as pd
from rich.console import Console
from rich.filesize import decimal
from rich.logging import RichHandler
from rich.table import Table
from rich.text import Text
from rich.tree import Tree

from .misc import _head_tail

FLOAT_FORMAT = '{:.6g}'


################################################################
# setup_logging
################################################################
def setup_logging(verbose: bool = False, console: Console = None):
    """Route the 'fpcascade' logger through a RichHandler

    Args:
        verbose (bool, optional): DEBUG instead of WARNING. Defaults to False.
        console (Console, optional): rich console. Defaults to None.
    """
    logger = logging.getLogger('fpcascade')
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(
        console=console,
        show_path=False,
        rich_tracebacks=False,
        markup=False,
    )
    handler.setFormatter(logging.Formatter('%(name)s: %(message)s'))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False
    return logger


################################################################
# rich_table
################################################################
def rich_table(
    df: pd.DataFrame,
    title: str = None,
    head: int = None,
    tail: int = None,
    console: Console = None
):
    """Display dataframe using rich

    Floats are shortened for display only; files keep full precision.

    Args:
        df (pd.DataFrame): Dataframe to display
        title (str, optional): Title. Defaults to None.
        head (int, optional): n head to display. Defaults to None.
        tail (int, optional): n tail to display. Defaults to None.
        console (Console, optional): rich console. Defaults to None.
    """
    table = Table()

    if title is not None:
        table.title = title
        table.title_justify = 'left'

    for c in df.columns:
        table.add_column(str(c), justify='right')

    def _row(values):
        return [
            FLOAT_FORMAT.format(_) if isinstance(_, float) else str(_)
            for _ in values
        ]

    _head, _tail = _head_tail(df, head=head, tail=tail)
    for values in _head.itertuples(index=False):
        table.add_row(*_row(values))
    if _tail is not None:
        table.add_row(*['...' for _ in df.columns])
        for values in _tail.itertuples(index=False):
            table.add_row(*_row(values))

    if console is None:
        console = Console()

    console.print(table)


################################################################
# rich_outputs
################################################################
def rich_outputs(
    out_dir: str,
    paths: list,
    console: Console = None,
):
    """Print written artifacts as a tree with file sizes

    Args:
        out_dir (str): Output directory (tree root).
        paths (list): Files written under out_dir.
        console (Console, optional): rich console. Defaults to None.
    """
    FILE_COLOR = 'white'
    SIZE_COLOR = 'dim'

    root = os.path.abspath(out_dir)
    tree = Tree(f"(out) [link file://{root}]{root}", guide_style='white')
    for path in sorted(paths):
        _text = Text(os.path.relpath(path, root), FILE_COLOR)
        _text.stylize(f"link file://{os.path.abspath(path)}")
        _text.append(f" ({decimal(os.path.getsize(path))})", SIZE_COLOR)
        tree.add(_text)

    if console is None:
        console = Console()

    console.print(tree)


# END
