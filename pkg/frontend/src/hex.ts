// Axial-coordinate geometry, matching the engine's convention exactly:
// neighbor offsets (1,0),(0,1),(-1,1),(-1,0),(0,-1),(1,-1), both axes
// wrapped modulo the lattice side.  Pixels use pointy-top hexes so all six
// neighbors sit at equal distance, i.e. the triangular lattice.

export const DIRECTIONS: ReadonlyArray<readonly [number, number]> = [
  [1, 0], [0, 1], [-1, 1], [-1, 0], [0, -1], [1, -1],
];

export interface Layout {
  size: number;      // hex circumradius in pixels
  originX: number;
  originY: number;
}

const SQRT3 = Math.sqrt(3);

export function axialToPixel(q: number, r: number, layout: Layout): { x: number; y: number } {
  return {
    x: layout.originX + layout.size * (SQRT3 * q + (SQRT3 / 2) * r),
    y: layout.originY + layout.size * 1.5 * r,
  };
}

export function pixelToAxial(x: number, y: number, layout: Layout): { q: number; r: number } {
  const px = (x - layout.originX) / layout.size;
  const py = (y - layout.originY) / layout.size;
  const qf = (SQRT3 / 3) * px - (1 / 3) * py;
  const rf = (2 / 3) * py;
  return hexRound(qf, rf);
}

/** Cube rounding: nearest lattice cell to fractional axial coordinates. */
export function hexRound(qf: number, rf: number): { q: number; r: number } {
  const sf = -qf - rf;
  let q = Math.round(qf);
  let r = Math.round(rf);
  const s = Math.round(sf);
  const dq = Math.abs(q - qf);
  const dr = Math.abs(r - rf);
  const ds = Math.abs(s - sf);
  if (dq > dr && dq > ds) {
    q = -r - s;
  } else if (dr > ds) {
    r = -q - s;
  }
  // adding zero collapses IEEE negative zero from the -r-s arithmetic
  return { q: q + 0, r: r + 0 };
}

export function wrap(v: number, side: number): number {
  return ((v % side) + side) % side;
}

/** Corner points of the pointy-top hex cell centered at (cx, cy). */
export function hexCorners(cx: number, cy: number, size: number): Array<[number, number]> {
  const pts: Array<[number, number]> = [];
  for (let i = 0; i < 6; i++) {
    const angle = (Math.PI / 180) * (60 * i - 30);
    pts.push([cx + size * Math.cos(angle), cy + size * Math.sin(angle)]);
  }
  return pts;
}

/** Layout sized so the wrapped side x side parallelogram fits the canvas. */
export function fitLayout(side: number, width: number, height: number): Layout {
  // drawn extent: x spans size*sqrt3*(side + side/2), y spans size*1.5*side
  const size = Math.min(
    width / (SQRT3 * (side + side / 2) + 2),
    height / (1.5 * side + 2),
  );
  return { size, originX: size * SQRT3 * 0.75, originY: size * 1.5 };
}
