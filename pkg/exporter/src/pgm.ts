/** Binary PGM (P5, maxval 255) parsing for frame input. */

export interface GrayImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major
}

export function parsePgm(data: Buffer): GrayImage {
  let pos = 0;

  function nextToken(): string {
    while (pos < data.length) {
      const c = data[pos];
      if (c === 0x23) {
        // '#' comment runs to end of line
        while (pos < data.length && data[pos] !== 0x0a && data[pos] !== 0x0d) pos++;
      } else if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d || c === 0x0b || c === 0x0c) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < data.length) {
      const c = data[pos];
      if (c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d || c === 0x0b || c === 0x0c || c === 0x23) break;
      pos++;
    }
    if (start === pos) throw new Error("truncated PGM header");
    return data.subarray(start, pos).toString("ascii");
  }

  const magic = nextToken();
  if (magic !== "P5") throw new Error(`not a binary PGM: magic "${magic}", expected "P5"`);
  const width = Number(nextToken());
  const height = Number(nextToken());
  const maxval = Number(nextToken());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`invalid PGM dimensions ${width}x${height}`);
  }
  if (maxval !== 255) throw new Error(`unsupported PGM maxval ${maxval}, only 255 is handled`);
  pos += 1; // single whitespace byte after maxval
  const expected = width * height;
  if (data.length - pos < expected) {
    throw new Error(`truncated PGM raster: expected ${expected} bytes, found ${data.length - pos}`);
  }
  return { width, height, pixels: new Uint8Array(data.subarray(pos, pos + expected)) };
}

export function encodePgm(image: GrayImage): Buffer {
  const header = Buffer.from(`P5\n${image.width} ${image.height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(image.pixels)]);
}
