"""Screen layout utilities: grid positions and the simplified HTML view."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import GeometryError
from .trace import Bounds, Element, ElementPath, Screen, find_element, iter_elements
from .utils import normalize_words, resource_words, short_class_name, tokenize

GRID_LABELS = (
    ("top left", "top", "top right"),
    ("left", "center", "right"),
    ("bottom left", "bottom", "bottom right"),
)

_INPUT_WORDS = frozenset({"input", "edit", "edittext", "textfield", "field", "textbox", "searchbox"})
_BUTTON_WORDS = frozenset({"button", "imagebutton", "checkbox", "switch", "toggle", "radiobutton", "fab"})
_IMAGE_WORDS = frozenset({"image", "imageview", "icon", "img", "picture", "photo"})


@dataclass(frozen=True)
class HtmlScreen:
    html: str
    index_map: Dict[int, ElementPath]
    screen: Optional[Screen] = None

    @property
    def is_empty(self) -> bool:
        return not self.index_map

    def element(self, element_id: int) -> Optional[Element]:
        if self.screen is None or element_id not in self.index_map:
            return None
        return find_element(self.screen.root, self.index_map[element_id])


def _cell(value: float, extent: int) -> int:
    # a center sitting on a boundary belongs to the upper/left cell
    if value <= extent / 3.0:
        return 0
    if value <= 2.0 * extent / 3.0:
        return 1
    return 2


def _clip(bounds: Bounds, screen_w: int, screen_h: int) -> Tuple[float, float, float, float]:
    left, top = max(bounds.left, 0), max(bounds.top, 0)
    right, bottom = min(bounds.right, screen_w), min(bounds.bottom, screen_h)
    # an edge-only touch is an empty overlap; zero-area bounds on screen are kept
    touching = (bounds.right > bounds.left and right <= left) or (bounds.bottom > bounds.top and bottom <= top)
    if left > right or top > bottom or touching:
        raise GeometryError(f"Bounds {bounds.as_list()} lie outside a {screen_w}x{screen_h} screen")
    return left, top, right, bottom


def grid_position(bounds: Bounds, screen_w: int, screen_h: int) -> str:
    """Label of the 3x3 screen cell holding the element's (clipped) center."""
    left, top, right, bottom = _clip(bounds, screen_w, screen_h)
    cx, cy = (left + right) / 2.0, (top + bottom) / 2.0
    return GRID_LABELS[_cell(cy, screen_h)][_cell(cx, screen_w)]


def html_tag(element: Element) -> str:
    words = set(tokenize(element.semantic_class))
    if not words:
        words = set(tokenize(short_class_name(element.class_name)))
    if words & _INPUT_WORDS:
        return "input"
    if words & _BUTTON_WORDS:
        return "button"
    if words & _IMAGE_WORDS:
        return "img"
    return "p"


def _retained(element: Element, screen: Screen) -> bool:
    if not element.visible:
        return False
    if not (element.clickable or element.text.strip() or element.content_description.strip()):
        return False
    try:
        _clip(element.bounds, screen.width, screen.height)
    except GeometryError:
        return False
    return True


def _html_line(element_id: int, element: Element, screen: Screen) -> str:
    tag = html_tag(element)
    attrs = [f'id="{element_id}"']
    css = " ".join(resource_words(element.resource_id))
    if css:
        attrs.append(f'class="{css}"')
    alt = normalize_words(element.content_description)
    if alt and element.content_description != element.text:
        attrs.append(f'alt="{alt}"')
    attrs.append(f'pos="{grid_position(element.bounds, screen.width, screen.height)}"')
    content = normalize_words(element.text)
    return f"<{tag} {' '.join(attrs)}>{content}</{tag}>"


def to_html(screen: Screen) -> HtmlScreen:
    lines: List[str] = []
    index_map: Dict[int, ElementPath] = {}
    for path, element in iter_elements(screen.root):
        if not _retained(element, screen):
            continue
        element_id = len(index_map)
        index_map[element_id] = path
        lines.append(_html_line(element_id, element, screen))
    if not lines:
        return HtmlScreen(html="<screen></screen>", index_map={}, screen=screen)
    html = "<screen>\n" + "\n".join(lines) + "\n</screen>"
    return HtmlScreen(html=html, index_map=index_map, screen=screen)
