// Just enough JPEG parsing to read the frame dimensions from the SOF
// marker, so the viewer can label frames without decoding them.

export interface JpegSize {
  width: number;
  height: number;
}

export function sofDimensions(data: Uint8Array): JpegSize {
  if (data.length < 4 || data[0] !== 0xff || data[1] !== 0xd8) {
    throw new Error("not a JPEG stream");
  }
  let i = 2;
  while (i + 3 < data.length) {
    if (data[i] !== 0xff) {
      throw new Error(`marker expected at offset ${i}`);
    }
    while (data[i] === 0xff) i++; // fill bytes collapse
    const marker = data[i++];
    if (marker === 0x01 || (marker >= 0xd0 && marker <= 0xd8)) {
      continue; // standalone marker, no segment
    }
    const length = (data[i] << 8) | data[i + 1];
    const isSof = marker >= 0xc0 && marker <= 0xcf
      && marker !== 0xc4 && marker !== 0xc8 && marker !== 0xcc;
    if (isSof) {
      return {
        height: (data[i + 3] << 8) | data[i + 4],
        width: (data[i + 5] << 8) | data[i + 6],
      };
    }
    if (marker === 0xd9 || marker === 0xda) {
      break; // end of image / entropy data without a SOF first
    }
    i += length;
  }
  throw new Error("no SOF marker found");
}
