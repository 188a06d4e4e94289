#!/usr/bin/env python3

COLORS = {"g":"\033[32m", "r":"\033[31m", "y":"\033[33m"}

def color_print(text:str=None, color:str=None) -> bool:
    """
    Prints a status line to the terminal in a given color.

    :param text: Text to print, defaults to None
    :type text: str, optional
    :param color: Color to print in (r - Red, g - Green, y - Yellow), defaults to None
    :type color: str, optional
    :return: Whether printing was successful
    :rtype: bool
    """
    # Don't print if no text or color is provided.
    if text is None or color is None:
        return False
    if color in COLORS:
        print(COLORS[color] + text + "\033[0m")
    else:
        # Unknown colors fall back to the default terminal color.
        print(text)
    return True
