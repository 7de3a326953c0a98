import logging
import math

from reportlab.pdfgen import canvas

from src.config import settings
from src.core import layout_helpers

logger = logging.getLogger(__name__)

# (mean column, sd column, printed heading) shown as "mean (SD)"
MEAN_SD_COLUMNS = (
    ("fp_mean", "fp_sd", "#FP"),
    ("fn_mean", "fn_sd", "#FN"),
    ("mean_fit_seconds", "sd_fit_seconds", "seconds"),
)

MAX_VALUE_CHARS = 90


def _format_cell(value):
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6g}"
    return str(value)


class ReportPDFGenerator:

    def generate(self, report, output_path):
        c = canvas.Canvas(output_path, pagesize=settings.PAGE_SIZE)
        c.setTitle(f"{report.kind} report")

        y = self._draw_title(c, report.kind)
        y = self._draw_key_values(c, self._key_values(report), y)

        header, rows = self._display_table(report.table)
        if header:
            self._draw_table(c, header, rows, y - settings.SECTION_GAP)

        c.save()

    def _key_values(self, report):
        items = [(key, value) for key, value in report.results.items()]
        for key, value in report.manifest.deterministic().items():
            items.append((f"manifest.{key}", value))
        return [
            f"{key}: {layout_helpers.truncate(_format_cell(value), MAX_VALUE_CHARS)}"
            for key, value in items
        ]

    def _display_table(self, table):
        if table is None or table.empty:
            return [], []

        columns = list(table.columns)
        merged = {}
        for mean_col, sd_col, heading in MEAN_SD_COLUMNS:
            if mean_col in columns and sd_col in columns:
                merged[mean_col] = (sd_col, heading)

        header = []
        skip = {sd for sd, _ in merged.values()}
        for col in columns:
            if col in skip:
                continue
            header.append(merged[col][1] if col in merged else str(col))

        rows = []
        for record in table.to_dict(orient="records"):
            row = []
            for col in columns:
                if col in skip:
                    continue
                if col in merged:
                    sd_col = merged[col][0]
                    row.append(layout_helpers.mean_sd(record[col], record[sd_col]))
                else:
                    row.append(_format_cell(record[col]))
            rows.append(row)
        return header, rows

    def _draw_title(self, canvas_obj, kind):
        canvas_obj.setFont(*settings.TITLE_FONT)
        canvas_obj.drawString(settings.X_START, settings.Y_START, f"{kind.capitalize()} report")
        return settings.Y_START - settings.TITLE_GAP

    def _draw_key_values(self, canvas_obj, lines, y):
        canvas_obj.setFont(*settings.MONO_FONT)
        for line in lines:
            if y < settings.Y_END:
                canvas_obj.showPage()
                canvas_obj.setFont(*settings.MONO_FONT)
                y = settings.Y_START
            canvas_obj.drawString(settings.X_START, y, line)
            y -= settings.LINE_HEIGHT
        return y

    def _draw_table(self, canvas_obj, header, rows, y):
        widths = layout_helpers.column_widths(header, rows)
        positions = layout_helpers.column_positions(widths, settings.X_START, settings.TABLE_WIDTH)

        first = layout_helpers.lines_per_page(y, settings.Y_END, settings.LINE_HEIGHT,
                                              reserved=settings.LINE_HEIGHT)
        rest = layout_helpers.lines_per_page(settings.Y_START, settings.Y_END,
                                             settings.LINE_HEIGHT, reserved=settings.LINE_HEIGHT)
        if first < 2:
            canvas_obj.showPage()
            y = settings.Y_START
            first = rest

        for page_index, page_rows in enumerate(layout_helpers.paginate(rows, first, rest)):
            if page_index > 0:
                canvas_obj.showPage()
                y = settings.Y_START

            canvas_obj.setFont(*settings.HEADER_FONT)
            self._draw_row(canvas_obj, header, positions, y)
            canvas_obj.line(settings.X_START, y - 3, settings.X_START + settings.TABLE_WIDTH, y - 3)
            y -= settings.LINE_HEIGHT

            canvas_obj.setFont(*settings.BODY_FONT)
            for row in page_rows:
                self._draw_row(canvas_obj, row, positions, y)
                y -= settings.LINE_HEIGHT

    def _draw_row(self, canvas_obj, cells, positions, y):
        for cell, x in zip(cells, positions):
            try:
                canvas_obj.drawString(x, y, str(cell))
            except (UnicodeEncodeError, ValueError) as e:
                logger.warning("cannot draw cell %r: %s", cell, e)
