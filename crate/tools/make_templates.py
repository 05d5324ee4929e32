"""Redraws the bundled card templates and their manifest."""
import json
import math
import sys
from pathlib import Path

from PIL import Image, ImageDraw

W, H = 1012, 638
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "crates/idbsynth/assets/templates"


def card(bg, band, accent, seed, header_h=90, photo=None, bars=(), waves=True):
    im = Image.new("RGB", (W, H), bg)
    d = ImageDraw.Draw(im)
    d.rounded_rectangle([6, 6, W - 7, H - 7], radius=38, outline=accent, width=6)
    d.rounded_rectangle([18, 18, W - 19, 18 + header_h], radius=22, fill=band)
    if waves:
        for k in range(6):
            pts = [(x, H - 60 + 12 * math.sin(x / 37.0 + k * 0.9 + seed) + k * 6) for x in range(24, W - 24, 4)]
            d.line(pts, fill=accent, width=1)
    if photo:
        d.rectangle(photo, fill=(214, 214, 214), outline=accent, width=3)
    for b in bars:
        d.rounded_rectangle(b, radius=6, fill=(205, 205, 210))
    return im


specs = []


def add(tid, kind, sym, place, im):
    im.save(OUT / f"{tid}.png", optimize=True)
    x, y, w, h = place
    specs.append({
        "template_id": tid, "image_path": f"{tid}.png", "width_px": W, "height_px": H,
        "placement": {"x": x, "y": y, "w": w, "h": h}, "symbology": sym, "document_kind": kind,
    })


add("dl_back_blue", "driver_license", "pdf417", (40, 150, 932, 400),
    card((226, 236, 246), (40, 84, 150), (40, 84, 150), 0.0, header_h=70, bars=[(40, 110, 420, 130), (560, 110, 972, 130)]))
add("dl_back_sand", "driver_license", "pdf417", (60, 130, 892, 420),
    card((246, 238, 222), (150, 92, 40), (150, 92, 40), 1.7, header_h=60, bars=[(60, 96, 360, 114)]))
add("ins_front_green", "insurance_card", "code128", (156, 300, 700, 220),
    card((234, 246, 238), (30, 120, 80), (30, 120, 80), 0.4, header_h=100,
         bars=[(50, 140, 520, 164), (50, 184, 440, 208), (50, 228, 600, 252), (620, 140, 960, 164), (620, 184, 900, 208)]))
add("ins_front_violet", "insurance_card", "code128", (106, 270, 800, 240),
    card((244, 240, 250), (96, 60, 140), (96, 60, 140), 2.3, header_h=80,
         bars=[(50, 120, 480, 142), (50, 160, 380, 182), (540, 120, 960, 142), (540, 160, 900, 182), (50, 200, 700, 222)]))
add("uni_front_crimson", "university_id", "pdf417", (106, 290, 800, 300),
    card((250, 246, 236), (140, 20, 40), (140, 20, 40), 0.9, header_h=80, photo=(40, 120, 220, 330),
         bars=[(250, 130, 700, 154), (250, 176, 620, 200), (250, 222, 560, 246)]))
add("uni_front_navy", "university_id", "pdf417", (81, 272, 850, 320),
    card((236, 242, 250), (20, 60, 110), (20, 60, 110), 3.1, header_h=70, photo=(792, 110, 972, 310),
         bars=[(40, 120, 600, 144), (40, 166, 520, 190), (40, 212, 480, 236)]))

with open(OUT / "manifest.json", "w") as f:
    json.dump({"templates": specs}, f, indent=2)
    f.write("\n")
