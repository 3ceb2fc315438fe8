/** Software-projected character viewport.
 *
 * The server owns all blendshape math; the client only applies the frame's
 * pose (plus a user orbit) as a model transform and rasterizes triangles
 * with a painter's sort and a single-light flat shade onto a 2D canvas
 * context.  The context is interface-typed so tests can supply a recorder.
 */

import type { MeshPayload } from "./api.js";

export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
}

export type Vec3 = [number, number, number];

export function matMulVec(m: number[][], v: Vec3): Vec3 {
  return [
    m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
    m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
    m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
  ];
}

export function matMul(a: number[][], b: number[][]): number[][] {
  const out = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return out;
}

/** Orbit rotation: yaw about +y then pitch about +x, in radians. */
export function orbitMatrix(yaw: number, pitch: number): number[][] {
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  const yawM = [
    [cy, 0, sy],
    [0, 1, 0],
    [-sy, 0, cy],
  ];
  const pitchM = [
    [1, 0, 0],
    [0, cp, -sp],
    [0, sp, cp],
  ];
  return matMul(pitchM, yawM);
}

export interface ProjectedVertex {
  x: number;
  y: number;
  depth: number;
}

/** Apply pose rotation/scale plus the orbit, then weak perspective. */
export function projectVertices(
  mesh: MeshPayload,
  yaw = 0,
  pitch = 0,
): ProjectedVertex[] {
  const rotation = matMul(orbitMatrix(yaw, pitch), mesh.pose.rotation);
  const s = mesh.pose.scale;
  const out: ProjectedVertex[] = [];
  for (let i = 0; i < mesh.vertices.length; i += 3) {
    const v: Vec3 = [
      mesh.vertices[i],
      mesh.vertices[i + 1],
      mesh.vertices[i + 2],
    ];
    const r = matMulVec(rotation, v);
    out.push({
      x: s * r[0] + mesh.pose.translation[0],
      y: s * r[1] + mesh.pose.translation[1],
      depth: r[2],
    });
  }
  return out;
}

interface Face {
  indices: number[];
  depth: number;
  shade: number;
}

function faceNormalZ(pts: ProjectedVertex[], face: number[]): number {
  const [a, b, c] = face.map((i) => pts[i]);
  // z of the cross product of (b-a) x (c-a) in screen space.
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

export function renderMesh(
  ctx: Canvas2D,
  mesh: MeshPayload,
  width: number,
  height: number,
  yaw = 0,
  pitch = 0,
): number {
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);
  const pts = projectVertices(mesh, yaw, pitch);
  if (pts.length === 0) {
    return 0;
  }

  // Fit the projected footprint into the canvas.
  const xs = pts.map((p) => p.x);
  const ys = pts.map((p) => p.y);
  const minX = Math.min(...xs), maxX = Math.max(...xs);
  const minY = Math.min(...ys), maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const fit = 0.85 * Math.min(width / spanX, height / spanY);
  const toScreen = (p: ProjectedVertex) => ({
    x: width / 2 + fit * (p.x - (minX + maxX) / 2),
    // Canvas y grows downward.
    y: height / 2 - fit * (p.y - (minY + maxY) / 2),
  });

  const faces: Face[] = [];
  for (const tri of mesh.faces) {
    const nz = faceNormalZ(pts, tri);
    if (nz <= 0) {
      continue; // back-facing
    }
    const depth =
      (pts[tri[0]].depth + pts[tri[1]].depth + pts[tri[2]].depth) / 3;
    faces.push({ indices: tri, depth, shade: nz });
  }
  faces.sort((a, b) => a.depth - b.depth);
  const maxShade = faces.reduce((m, f) => Math.max(m, f.shade), 1e-9);

  for (const face of faces) {
    const tone = Math.round(90 + 150 * Math.sqrt(face.shade / maxShade));
    ctx.fillStyle = `rgb(${tone}, ${Math.round(tone * 0.87)}, ${Math.round(
      tone * 0.76,
    )})`;
    ctx.beginPath();
    const first = toScreen(pts[face.indices[0]]);
    ctx.moveTo(first.x, first.y);
    for (const idx of face.indices.slice(1)) {
      const p = toScreen(pts[idx]);
      ctx.lineTo(p.x, p.y);
    }
    ctx.closePath();
    ctx.fill();
  }
  return faces.length;
}
