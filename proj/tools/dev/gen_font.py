# Regenerates src/font6x11.inc from Pillow's built-in bitmap font.
import sys
from PIL import Image, ImageDraw, ImageFont

W, H = 6, 11
font = ImageFont.load_default_imagefont()
rows = []
for c in range(32, 127):
    img = Image.new("1", (W, H), 0)
    ImageDraw.Draw(img).text((0, 0), chr(c), font=font, fill=1)
    bits = []
    for y in range(H):
        v = 0
        for x in range(W):
            if img.getpixel((x, y)):
                v |= 1 << (W - 1 - x)
        bits.append(v)
    rows.append("  {" + ", ".join(f"0x{b:02x}" for b in bits) + "},  // " + repr(chr(c)))
out = sys.argv[1] if len(sys.argv) > 1 else "src/font6x11.inc"
with open(out, "w") as fh:
    fh.write("// Generated by tools/dev/gen_font.py; glyphs for ASCII 32..126, 6x11, MSB = leftmost.\n")
    fh.write("\n".join(rows) + "\n")
