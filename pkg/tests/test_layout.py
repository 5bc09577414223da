import pytest
from hypothesis import given
from hypothesis import strategies as st

from greenbriar_macros.errors import GeometryError
from greenbriar_macros.layout import GRID_LABELS, grid_position, html_tag, to_html
from greenbriar_macros.samples import reminder_screen
from greenbriar_macros.trace import Bounds, Element, Screen

REMINDER_HTML = "\n".join(
    [
        "<screen>",
        '<img id="0" class="cancel image" pos="top left"></img>',
        '<button id="1" class="save" pos="top right">save</button>',
        '<input id="2" class="title edit" pos="top">remind me to</input>',
        '<p id="3" class="first line" pos="top">all day</p>',
        '<img id="4" class="tile icon" pos="top left"></img>',
        '<p id="5" class="first line" pos="top">sun dec 13 2020</p>',
        '<button id="6" alt="start time 8 00 am" pos="top right">8 00 am</button>',
        '<p id="7" class="first line" alt="does not repeat" pos="top">does not repeat</p>',
        '<img id="8" class="tile icon" pos="top left"></img>',
        "</screen>",
    ]
)


def _screen(*children):
    root = Element(class_name="android.widget.FrameLayout", bounds=Bounds(0, 0, 1080, 1920), children=children)
    return Screen(index=0, root=root, width=1080, height=1920)


def test_grid_position_cells():
    assert grid_position(Bounds(440, 860, 640, 1060), 1080, 1920) == "center"
    assert grid_position(Bounds(0, 0, 100, 100), 1080, 1920) == "top left"
    assert grid_position(Bounds(980, 1820, 1080, 1920), 1080, 1920) == "bottom right"


def test_grid_position_boundary_goes_to_lower_cell():
    # center x == 360 exactly, middle row
    assert grid_position(Bounds(310, 900, 410, 1000), 1080, 1920) == "left"


def test_grid_position_clips_partially_visible():
    # only (0,0)-(100,100) is on screen
    assert grid_position(Bounds(-500, -500, 100, 100), 1080, 1920) == "top left"


def test_grid_position_outside_screen():
    with pytest.raises(GeometryError):
        grid_position(Bounds(2000, 0, 2100, 100), 1080, 1920)


def test_html_tag_from_semantic_class():
    assert html_tag(Element(semantic_class="INPUT")) == "input"
    assert html_tag(Element(semantic_class="BUTTON")) == "button"
    assert html_tag(Element(semantic_class="ICON")) == "img"
    assert html_tag(Element(semantic_class="TEXT")) == "p"
    assert html_tag(Element(class_name="android.widget.ImageButton")) == "button"


def test_reminder_screen_html():
    html = to_html(reminder_screen(9))
    assert html.html == REMINDER_HTML
    assert html.index_map[1] == (1,)
    assert html.index_map[2] == (2,)
    assert html.element(5).text == "Sun, Dec 13, 2020"


def test_empty_screen():
    html = to_html(_screen(Element(text="", bounds=Bounds(0, 0, 100, 100))))
    assert html.html == "<screen></screen>"
    assert html.index_map == {}
    assert html.is_empty


def test_ids_follow_pre_order_and_skip_hidden():
    row = Element(
        bounds=Bounds(0, 0, 1080, 200),
        children=(
            Element(text="first", bounds=Bounds(0, 0, 100, 100)),
            Element(text="hidden", visible=False, bounds=Bounds(0, 0, 100, 100)),
            Element(text="offscreen", bounds=Bounds(3000, 0, 3100, 100)),
        ),
    )
    html = to_html(_screen(row, Element(clickable=True, bounds=Bounds(0, 300, 100, 400)), Element(text="last")))
    assert html.index_map == {0: (0, 0), 1: (1,), 2: (2,)}
    assert "hidden" not in html.html
    assert "offscreen" not in html.html


@st.composite
def _on_screen(draw):
    w, h = draw(st.integers(1, 3000)), draw(st.integers(1, 3000))
    left = draw(st.integers(0, w))
    top = draw(st.integers(0, h))
    return Bounds(left, top, draw(st.integers(left, w)), draw(st.integers(top, h))), w, h


def _in_band(cell, center, extent):
    low_ok = cell == 0 or center > cell * extent / 3.0
    return low_ok and center <= (cell + 1) * extent / 3.0


@given(_on_screen())
def test_grid_position_picks_the_one_cell_holding_the_center(case):
    bounds, w, h = case
    label = grid_position(bounds, w, h)
    [(row, col)] = [(r, c) for r, labels in enumerate(GRID_LABELS) for c, name in enumerate(labels) if name == label]
    cx, cy = bounds.center
    assert _in_band(col, cx, w)
    assert _in_band(row, cy, h)


@given(st.integers(1, 1000), st.integers(1, 1000))
def test_grid_boundaries_go_up_and_left(k, m):
    w, h = 3 * k, 3 * m
    assert grid_position(Bounds(k, m, k, m), w, h) == "top left"
    assert grid_position(Bounds(2 * k, 2 * m, 2 * k, 2 * m), w, h) == "center"
    assert grid_position(Bounds(w, h, w, h), w, h) == "bottom right"


@given(st.integers(1, 3000), st.integers(0, 500), st.integers(1, 500))
def test_grid_position_rejects_bounds_past_the_right_edge(w, gap, width):
    with pytest.raises(GeometryError):
        grid_position(Bounds(w + gap, 0, w + gap + width, 10), w, 100)


def test_grid_position_rejects_edge_only_overlap():
    with pytest.raises(GeometryError):
        grid_position(Bounds(1080, 0, 1200, 100), 1080, 1920)
    with pytest.raises(GeometryError):
        grid_position(Bounds(-100, 0, 0, 100), 1080, 1920)
    with pytest.raises(GeometryError):
        grid_position(Bounds(0, 1920, 100, 2000), 1080, 1920)
    assert grid_position(Bounds(1079, 0, 1200, 100), 1080, 1920) == "top right"
