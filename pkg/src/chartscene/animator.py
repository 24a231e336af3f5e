"""Animation planning from narrative actions, and final composition.

Animation configs follow fixed guideline templates keyed by target role.
Composition compiles the configs to native SVG/CSS keyframe animations with
the same property endpoints and exact timing values.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .charts import HIGHLIGHT_COLOR
from .executor import DocumentState
from .model import AnimationConfig, EvaluationResult, NarrativeAction

NEUTRAL_COLOR = "#cccccc"
GROUP_DELAY_MS = 200.0

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")


class CompositionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# templates

def axes_fade_in(delay: float = 0.0) -> AnimationConfig:
    return AnimationConfig(
        targets=".axis", animation_type="entrance",
        properties=(("opacity", (0, 1)), ("strokeWidth", (0, 2))),
        duration=800, delay=delay)


def bar_grow_in(delay: float = 100.0) -> AnimationConfig:
    return AnimationConfig(
        targets=".mark", animation_type="entrance",
        properties=(("height", ("0%", "100%")), ("translateY", (50, 0)),
                    ("opacity", (0, 1))),
        duration=800, delay=delay, direction="bottom")


def line_wipe_in(path_length: float, delay: float = 0.0) -> AnimationConfig:
    return AnimationConfig(
        targets=".line-path", animation_type="entrance",
        properties=(("strokeDashoffset", (round(path_length, 2), 0)),),
        duration=1500, delay=delay)


def pie_wheel_in(delay: float = 0.0) -> AnimationConfig:
    return AnimationConfig(
        targets=".mark", animation_type="entrance",
        properties=(("rotate", ("-90deg", "0deg")), ("scale", (0, 1))),
        duration=800, delay=delay)


def float_in(targets: str, delay: float = 200.0, direction: str = "top") -> AnimationConfig:
    return AnimationConfig(
        targets=targets, animation_type="entrance",
        properties=(("translateY", ("20px", "0")), ("opacity", (0, 1))),
        duration=800, delay=delay, direction=direction)


def change_color(targets: str, delay: float = 0.0,
                 highlight: str = HIGHLIGHT_COLOR) -> AnimationConfig:
    return AnimationConfig(
        targets=targets, animation_type="emphasis",
        properties=(("fill", (NEUTRAL_COLOR, highlight)),),
        duration=500, delay=delay)


# ---------------------------------------------------------------------------
# planning

def _polyline_length(doc: DocumentState) -> float:
    pts = [m["position"] for m in doc.chart.mark_data if "position" in m]
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:]))


def _mark_for_value(doc: DocumentState, value: float) -> Optional[str]:
    for m in doc.chart.mark_data:
        if float(m.get("value", float("nan"))) == value:
            return m["class"]
    return None


def plan_animations(actions: Sequence[NarrativeAction], doc: DocumentState,
                    ) -> tuple[list[AnimationConfig], list[str]]:
    """Map narrative actions onto the guideline templates.

    Entrance configs are ordered axes, then marks, then annotations, each
    group offset by 200 ms. Returns (configs, warnings).
    """
    family = doc.chart.proposal.family
    has_axes = family in ("bar", "line", "scatter", "area")
    configs: list[AnimationConfig] = []
    warnings: list[str] = []

    if any(a.kind == "enter" for a in actions):
        group = 0
        if has_axes:
            configs.append(axes_fade_in(delay=group * GROUP_DELAY_MS))
            group += 1
        mark_delay = group * GROUP_DELAY_MS
        if family == "bar":
            configs.append(bar_grow_in(delay=mark_delay + 100))
        elif family in ("line", "area"):
            configs.append(line_wipe_in(_polyline_length(doc), delay=mark_delay))
        elif family in ("pie", "donut"):
            configs.append(pie_wheel_in(delay=mark_delay))
        else:
            configs.append(float_in(".mark", delay=mark_delay + 200))
        group += 1
        annotation_classes = [cls for cls, role in doc.chart.class_index.items()
                              if role == "annotation"]
        for cls in sorted(annotation_classes):
            configs.append(float_in(f".{cls}", delay=group * GROUP_DELAY_MS + 200))

    emphasis_delay = (max((c.delay + c.duration for c in configs), default=0.0))
    for a in actions:
        if a.kind != "emphasize":
            continue
        target = None
        for number in _NUMBER_RE.findall(a.description):
            cls = _mark_for_value(doc, float(number))
            if cls is not None:
                target = f'.mark[data-value={_fmt_value(float(number))}]'
                break
        if target is None:
            warnings.append(f"emphasize action matches no datum: {a.description!r}")
            continue
        configs.append(change_color(target, delay=emphasis_delay))
    return configs, warnings


def _fmt_value(v: float) -> str:
    return str(int(v)) if v.is_integer() else str(v)


# ---------------------------------------------------------------------------
# composition

@dataclass
class CompositionDocument:
    svg: str
    preview_html: str
    animations: list[AnimationConfig]
    chart_id: str
    image_ref: str
    image_size: tuple[int, int]
    evaluation: Optional[EvaluationResult] = None

    def to_obj(self) -> dict:
        out: dict[str, Any] = {
            "chartId": self.chart_id,
            "imageRef": self.image_ref,
            "imageSize": {"w": self.image_size[0], "h": self.image_size[1]},
            "animations": [a.to_obj() for a in self.animations],
        }
        if self.evaluation is not None:
            out["evaluation"] = self.evaluation.to_obj()
        return out


_INNER_RE = re.compile(r"<svg[^>]*>(.*)</svg>\s*$", re.DOTALL)


def _chart_overlay(doc: DocumentState) -> str:
    serialized = doc.serialize()
    match = _INNER_RE.search(serialized)
    if match is None:
        raise CompositionError("chart document has no svg root")
    return match.group(1)


def _resolvable(doc: DocumentState, targets: str) -> bool:
    base = targets.split("[")[0].lstrip(".#")
    return base in doc.chart.classes() or base == "axis"


def compose(image_ref: str, image_size: tuple[int, int], doc: DocumentState,
            animations: Sequence[AnimationConfig] = (),
            evaluation: Optional[EvaluationResult] = None,
            title: str = "Composition") -> CompositionDocument:
    """Assemble the raster, the transformed chart overlay, and animations."""
    for cfg in animations:
        if not _resolvable(doc, cfg.targets):
            raise CompositionError(f"animation selector does not resolve: {cfg.targets!r}")
    w, h = image_size
    overlay = _chart_overlay(doc)
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'width="{w}" height="{h}" viewBox="0 0 {w} {h}">'
        f'<image href="{image_ref}" x="0" y="0" width="{w}" height="{h}"/>'
        f"{overlay}</svg>"
    )
    css = compile_css(animations)
    preview = (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>{title}</title>\n<style>\n{css}</style>\n</head>\n<body>\n"
        f"{svg}\n</body>\n</html>\n"
    )
    return CompositionDocument(
        svg=svg, preview_html=preview, animations=list(animations),
        chart_id=doc.chart.proposal.chart_id, image_ref=image_ref,
        image_size=image_size, evaluation=evaluation)


def _css_selector(targets: str) -> str:
    base = targets.lstrip()
    if base.startswith((".", "#")):
        return base
    return f".{base}"


def _endpoint_css(props: Sequence[tuple[str, tuple[Any, Any]]], index: int) -> str:
    """CSS declaration block for one end (0 = from, 1 = to) of the properties."""
    decls: list[str] = []
    transforms: list[str] = []
    for name, pair in props:
        value = pair[index]
        if name == "opacity":
            decls.append(f"opacity: {value}")
        elif name == "strokeWidth":
            decls.append(f"stroke-width: {value}px")
        elif name == "fill":
            decls.append(f"fill: {value}")
        elif name == "strokeDashoffset":
            decls.append(f"stroke-dashoffset: {value}")
        elif name in ("translateY", "translateX"):
            unit = "" if isinstance(value, str) else "px"
            fn = "translateY" if name == "translateY" else "translateX"
            transforms.append(f"{fn}({value}{unit})")
        elif name in ("scale", "scaleX", "scaleY"):
            transforms.append(f"{name}({value})")
        elif name == "rotate":
            transforms.append(f"rotate({value})")
        elif name == "height":
            # groups have no height attribute; scale vertically instead
            scale = str(value).rstrip("%")
            transforms.append(f"scaleY({float(scale) / 100 if str(value).endswith('%') else value})")
        else:
            decls.append(f"{name}: {value}")
    if transforms:
        decls.append("transform: " + " ".join(transforms))
    return "; ".join(decls)


def compile_css(animations: Sequence[AnimationConfig]) -> str:
    """Compile configs to keyframes; duration/delay values pass through exactly."""
    rules: list[str] = []
    for i, cfg in enumerate(animations):
        name = f"anim-{i}"
        selector = _css_selector(cfg.targets)
        frm = _endpoint_css(cfg.properties, 0)
        to = _endpoint_css(cfg.properties, 1)
        rules.append(f"@keyframes {name} {{ from {{ {frm}; }} to {{ {to}; }} }}")
        extra = ""
        if any(p[0] == "strokeDashoffset" for p in cfg.properties):
            dash = next(p[1][0] for p in cfg.properties if p[0] == "strokeDashoffset")
            extra = f" stroke-dasharray: {dash};"
        rules.append(
            f"{selector} {{ animation: {name} {_ms(cfg.duration)} linear "
            f"{_ms(cfg.delay)} both; transform-box: fill-box; "
            f"transform-origin: center;{extra} }}")
    return "\n".join(rules) + ("\n" if rules else "")


def _ms(v: float) -> str:
    return f"{int(v)}ms" if float(v).is_integer() else f"{v}ms"


# ---------------------------------------------------------------------------
# gallery

def build_gallery(entries: Sequence[dict]) -> str:
    """Index page listing alternatives with their scores.

    Each entry: {"title", "href", "score", "conflict": bool}.
    """
    cards = []
    for e in entries:
        badge = '<span class="badge">conflict</span>' if e.get("conflict") else ""
        cards.append(
            '<div class="card">'
            f'<a href="{e["href"]}">{e["title"]}</a>'
            f'<div class="score">score {e["score"]:.3f}</div>{badge}</div>')
    body = "\n".join(cards)
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        "<title>Alternatives</title>\n<style>\n"
        ".card { border: 1px solid #ccc; padding: 12px; margin: 8px; "
        "display: inline-block; }\n"
        ".badge { color: #fff; background: #c0392b; padding: 2px 6px; }\n"
        "</style>\n</head>\n<body>\n"
        f"{body}\n</body>\n</html>\n"
    )


def animation_prompt(actions: Sequence[NarrativeAction], svg: str) -> str:
    """Render the animation-generation prompt for the LLM path."""
    action_text = "; ".join(f"{a.kind}: {a.description}" for a in actions)
    return (
        "You are an expert in generating animations for SVG elements. Based on the "
        f"natural language description of the animation {{{action_text}}} and the "
        f"provided SVG file {{{svg}}}, first identify the target elements that "
        "require animation. Then, according to the description and the "
        "characteristics of data visualization, generate the corresponding "
        "animation configuration.\n\n"
        "You may use the following animation guidelines as a reference:\n"
        "- Axes-fade-in: Apply changes in opacity and strokeWidth to elements with "
        "the class '.axis' (opacity: [0,1], strokeWidth: [0,2], duration: 800) - "
        "used for rendering coordinate axes.\n"
        "- Bar-grow-in: Animate height and translateY with elasticity (height: "
        "['0%', '100%'], translateY: [50,0], elasticity: 300, stagger: 100) - used "
        "for animating bar chart columns.\n"
        "- Line-wipe-in: Animate strokeDashoffset (strokeDashoffset: [pathLength, "
        "0], duration: 1500) - used for line chart paths.\n"
        "- Pie-wheel-in: Apply rotation and scaling (rotate: ['-90deg', '0deg'], "
        "scale: [0,1], easing: 'spring(1, 80, 10, 0)') - used for animating pie "
        "chart sectors.\n"
        "- Float-in: Animate translateY/translateX and opacity (translateY: "
        "['20px', '0'], opacity: [0,1], direction: 'top', delay: 200) - used for "
        "floating tooltips or annotations.\n"
        "- Change-color: Change the fill color (fill: ['#ccc', '#f00'], duration: "
        "500) for elements with the selector e.g. '.bar[data-value>50]'.\n\n"
        "Please return the animation as a JSON object with keys targets, "
        "animation_type ('entrance' | 'emphasis'), properties (property name to "
        "[from, to] pairs, optional direction), and timing {duration, delay}.\n"
    )
