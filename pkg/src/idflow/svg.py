"""Static SVG heatmaps of field frames: one rectangle per cell, hatched masks, a color bar and a title"""
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import matplotlib
import numpy as np
from matplotlib.colors import to_hex

from idflow.constants import MASK_NONE
from idflow.emit import PathLike, write_text
from idflow.fields import FieldFrame

SVG_NS = 'http://www.w3.org/2000/svg'


@dataclass(frozen=True)
class PaletteSpec:
    """Colormaps and geometry of a rendering"""
    diverging: str = 'RdBu_r'
    sequential: str = 'viridis'
    cell_size: int = 4
    margin: int = 40
    bar_width: int = 16
    bar_steps: int = 64
    hatch_color: str = '#808080'


def color_scale(frame: FieldFrame) -> Tuple[float, float]:
    """
    Value range mapped onto the palette: symmetric [-m, m] with m = max |value| for signed fields, [min, max]
    otherwise. Empty frames map onto [0, 0]
    """
    values = frame.unmasked()
    values = values[np.isfinite(values)]
    if values.size == 0:
        return 0.0, 0.0
    if frame.signed:
        top = float(max(abs(values.min()), abs(values.max())))
        return -top, top
    return float(values.min()), float(values.max())


def palette_position(value: float, low: float, high: float) -> float:
    """Position of value in [0, 1]; the middle of the palette when the range is empty"""
    if high <= low:
        return 0.5
    return min(1.0, max(0.0, (value - low) / (high - low)))


def _label(value: float) -> str:
    return f'{value:.4g}'


def _ticks(low: float, high: float) -> List[float]:
    ticks = [low, high]
    if low < 0 < high or low == high == 0:
        ticks.insert(1, 0.0)
    return sorted(set(ticks))


def svg_document(frame: FieldFrame, palette: PaletteSpec) -> str:
    """
    SVG text of a frame. Axis 1 runs left to right, axis 2 bottom to top
    :param frame: FieldFrame
    :param palette: PaletteSpec
    :return: SVG document
    """
    cmap = matplotlib.colormaps[palette.diverging if frame.signed else palette.sequential]
    low, high = color_scale(frame)
    rows, cols = frame.shape
    size, margin = palette.cell_size, palette.margin
    plot_w, plot_h = rows * size, cols * size
    bar_x = margin + plot_w + margin // 2
    width = bar_x + palette.bar_width + 4 * margin
    height = plot_h + 2 * margin

    root = ET.Element('svg', {'xmlns': SVG_NS, 'width': str(width), 'height': str(height),
                              'viewBox': f'0 0 {width} {height}'})
    defs = ET.SubElement(root, 'defs')
    pattern = ET.SubElement(defs, 'pattern', {'id': 'hatch', 'patternUnits': 'userSpaceOnUse', 'width': '4',
                                              'height': '4'})
    ET.SubElement(pattern, 'path', {'d': 'M0,4 L4,0', 'stroke': palette.hatch_color, 'stroke-width': '1'})

    title = ET.SubElement(root, 'text', {'x': str(margin), 'y': str(margin // 2), 'font-size': '14',
                                         'class': 'title'})
    title.text = f'{frame.field} at λt={frame.time:g}'

    cells = ET.SubElement(root, 'g', {'class': 'cells'})
    for i in range(rows):
        for j in range(cols):
            reason = str(frame.mask[i, j])
            fill = 'url(#hatch)' if reason != MASK_NONE else \
                to_hex(cmap(palette_position(float(frame.values[i, j]), low, high)))
            ET.SubElement(cells, 'rect', {'x': str(margin + i * size), 'y': str(margin + (cols - 1 - j) * size),
                                          'width': str(size), 'height': str(size), 'fill': fill,
                                          'data-row': str(i), 'data-col': str(j)})

    bar = ET.SubElement(root, 'g', {'class': 'colorbar'})
    step_h = plot_h / palette.bar_steps
    for k in range(palette.bar_steps):
        position = (k + 0.5) / palette.bar_steps
        ET.SubElement(bar, 'rect', {'x': str(bar_x), 'y': f'{margin + plot_h - (k + 1) * step_h:.3f}',
                                    'width': str(palette.bar_width), 'height': f'{step_h:.3f}',
                                    'fill': to_hex(cmap(position))})
    for tick in _ticks(low, high):
        y = margin + plot_h * (1 - palette_position(tick, low, high)) if high > low else margin + plot_h / 2
        label = ET.SubElement(bar, 'text', {'x': str(bar_x + palette.bar_width + 4), 'y': f'{y:.3f}',
                                            'font-size': '10', 'class': 'tick'})
        label.text = _label(tick)

    for text, x, y in ((frame.axis_labels[0], margin + plot_w / 2, height - margin / 4),
                       (frame.axis_labels[1], margin / 4, margin + plot_h / 2)):
        axis = ET.SubElement(root, 'text', {'x': f'{x:.3f}', 'y': f'{y:.3f}', 'font-size': '12', 'class': 'axis'})
        axis.text = text
    return ET.tostring(root, encoding='unicode') + '\n'


def render_svg(frame: FieldFrame, palette_spec: PaletteSpec, path: PathLike) -> Path:
    """
    Renders a frame as a static SVG heatmap
    :param frame: FieldFrame
    :param palette_spec: PaletteSpec
    :param path: destination file
    :return: the written path
    """
    return write_text(path, svg_document(frame, palette_spec))
