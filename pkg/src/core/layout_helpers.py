import math


def lines_per_page(y_start, y_end, line_height, reserved=0):
    available = y_start - y_end - reserved
    return max(int(math.floor(available / line_height)), 1)


def paginate(lines, first_page_capacity, page_capacity):
    """Split ``lines`` into pages; the first page may hold fewer lines."""
    if first_page_capacity < 1 or page_capacity < 1:
        raise ValueError("page capacities must be positive")

    pages = [list(lines[:first_page_capacity])]
    rest = lines[first_page_capacity:]
    for start in range(0, len(rest), page_capacity):
        pages.append(list(rest[start:start + page_capacity]))
    return pages


def column_positions(widths, x_start, total_width):
    total = float(sum(widths))
    if total <= 0:
        return []
    positions = []
    x = x_start
    for width in widths:
        positions.append(x)
        x += total_width * width / total
    return positions


def column_widths(header, rows):
    widths = [len(str(cell)) for cell in header]
    for row in rows:
        for index, cell in enumerate(row):
            widths[index] = max(widths[index], len(str(cell)))
    return [max(width, 3) for width in widths]


def truncate(text, max_chars):
    text = str(text)
    if len(text) <= max_chars:
        return text
    return text[:max(max_chars - 3, 0)] + "..."


def mean_sd(mean, sd):
    if mean is None or (isinstance(mean, float) and math.isnan(mean)):
        return ""
    return f"{mean:.2f} ({sd:.2f})"
