# Regenerates golden_2x1.grgf independently of the Rust writer.
import struct

d1, d2, nx, ny, k = 2, 1, 3, 2, 4
xe, ye = 1.5, 0.75
n = nx**d1 * ny**d2
b = b"GRGF" + struct.pack("<I", 1) + struct.pack("<5I", d1, d2, nx, ny, k) + struct.pack("<2d", xe, ye) + struct.pack("<Q", n)
for i in range(n):
    b += struct.pack("<2d", i + 0.25, -(i / 8.0))  # keeps the sign of zero
with open("golden_2x1.grgf", "wb") as f:
    f.write(b)
