"""Tiny deterministic SVG chart writer (no plotting stack).

Output bytes depend only on the input data: floats are formatted with a
fixed rule and nothing is timestamped, so re-rendering the same table gives
an identical file.
"""

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 160, 40, 50

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
           "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(x):
    return f"{float(x):.6g}"


def _y_scale(values):
    lo = min(values)
    hi = max(values)
    if lo > 0 and lo / (hi + 1e-300) > 0.2:
        lo = 0.0
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    return lo, hi + pad


def _el(tag, body=None, **attrs):
    parts = [f"<{tag}"]
    for key in sorted(attrs):
        parts.append(f' {key.replace("_", "-")}="{attrs[key]}"')
    if body is None:
        parts.append("/>")
    else:
        parts.append(f">{body}</{tag}>")
    return "".join(parts)


def _frame(title, y_label, y_lo, y_hi, x_label=""):
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        _el("rect", x=0, y=0, width=WIDTH, height=HEIGHT, fill="white"),
        _el("text", title, x=WIDTH // 2, y=24, text_anchor="middle",
            font_family="sans-serif", font_size=16),
    ]
    # axes
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    out.append(_el("line", x1=x0, y1=MARGIN_T, x2=x0, y2=y0, stroke="black"))
    out.append(_el("line", x1=x0, y1=y0, x2=x0 + plot_w, y2=y0, stroke="black"))
    # y ticks
    for i in range(5):
        fy = i / 4
        val = y_lo + fy * (y_hi - y_lo)
        y = y0 - fy * plot_h
        out.append(_el("line", x1=x0 - 4, y1=_fmt(y), x2=x0, y2=_fmt(y),
                       stroke="black"))
        out.append(_el("text", _fmt(val), x=x0 - 8, y=_fmt(y + 4),
                       text_anchor="end", font_family="sans-serif", font_size=11))
    out.append(_el("text", y_label, x=16, y=HEIGHT // 2, font_family="sans-serif",
                   font_size=12,
                   transform=f"rotate(-90 16 {HEIGHT // 2})", text_anchor="middle"))
    if x_label:
        out.append(_el("text", x_label, x=x0 + plot_w // 2, y=HEIGHT - 12,
                       text_anchor="middle", font_family="sans-serif", font_size=12))
    return out, x0, y0, plot_w, plot_h


def _legend(out, names):
    lx = WIDTH - MARGIN_R + 12
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        ly = MARGIN_T + 16 * i
        out.append(_el("rect", x=lx, y=ly, width=10, height=10, fill=color))
        out.append(_el("text", name, x=lx + 14, y=ly + 9,
                       font_family="sans-serif", font_size=11))


def line_chart(title, x_label, y_label, x_values, series):
    """SVG line chart; series maps name -> y values aligned with x_values."""
    if not x_values or not series:
        raise ValueError("line_chart needs at least one x value and one series")
    for name, ys in series.items():
        if len(ys) != len(x_values):
            raise ValueError(f"series {name!r} length differs from x values")
    all_y = [y for ys in series.values() for y in ys]
    y_lo, y_hi = _y_scale(all_y)
    out, x0, y0, plot_w, plot_h = _frame(title, y_label, y_lo, y_hi, x_label)

    xs = list(x_values)
    x_lo, x_hi = min(xs), max(xs)
    span = (x_hi - x_lo) or 1.0

    def px(x):
        return x0 + (x - x_lo) / span * plot_w

    def py(y):
        return y0 - (y - y_lo) / (y_hi - y_lo) * plot_h

    for x in xs:
        out.append(_el("line", x1=_fmt(px(x)), y1=y0, x2=_fmt(px(x)), y2=y0 + 4,
                       stroke="black"))
        out.append(_el("text", _fmt(x), x=_fmt(px(x)), y=y0 + 18,
                       text_anchor="middle", font_family="sans-serif", font_size=11))
    for i, (name, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        out.append(_el("polyline", points=points, fill="none", stroke=color,
                       stroke_width=2))
        for x, y in zip(xs, ys):
            out.append(_el("circle", cx=_fmt(px(x)), cy=_fmt(py(y)), r=3,
                           fill=color))
    _legend(out, list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(title, y_label, group_labels, series):
    """SVG grouped bars; series maps name -> one value per group label."""
    if not group_labels or not series:
        raise ValueError("bar_chart needs at least one group and one series")
    for name, ys in series.items():
        if len(ys) != len(group_labels):
            raise ValueError(f"series {name!r} length differs from group count")
    all_y = [y for ys in series.values() for y in ys]
    y_lo, y_hi = _y_scale([0.0, *all_y])
    out, x0, y0, plot_w, plot_h = _frame(title, y_label, y_lo, y_hi)

    n_groups = len(group_labels)
    n_series = len(series)
    group_w = plot_w / n_groups
    bar_w = group_w * 0.8 / n_series

    def py(y):
        return y0 - (y - y_lo) / (y_hi - y_lo) * plot_h

    for gi, label in enumerate(group_labels):
        gx = x0 + gi * group_w
        out.append(_el("text", str(label), x=_fmt(gx + group_w / 2), y=y0 + 18,
                       text_anchor="middle", font_family="sans-serif", font_size=11))
        for si, (name, ys) in enumerate(series.items()):
            color = PALETTE[si % len(PALETTE)]
            bx = gx + group_w * 0.1 + si * bar_w
            top = py(ys[gi])
            out.append(_el("rect", x=_fmt(bx), y=_fmt(top), width=_fmt(bar_w),
                           height=_fmt(y0 - top), fill=color))
    _legend(out, list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"
