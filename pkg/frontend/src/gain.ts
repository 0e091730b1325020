/** Gain curve: cumulative relevant documents found per judgment made. */

export interface GainPoint {
  judgments: number;
  relevantFound: number;
}

export function gainCurve(labels: number[]): GainPoint[] {
  const points: GainPoint[] = [];
  let found = 0;
  labels.forEach((label, i) => {
    if (label === 1) found += 1;
    points.push({ judgments: i + 1, relevantFound: found });
  });
  return points;
}

/** SVG polyline points for the curve, scaled into a width x height box. */
export function gainPolyline(points: GainPoint[], width: number, height: number): string {
  if (points.length === 0) return "";
  const lastPoint = points[points.length - 1]!;
  const maxX = Math.max(lastPoint.judgments, 1);
  const maxY = Math.max(lastPoint.relevantFound, 1);
  const coords = [{ judgments: 0, relevantFound: 0 }, ...points].map((p) => {
    const x = (p.judgments / maxX) * width;
    const y = height - (p.relevantFound / maxY) * height;
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  return coords.join(" ");
}
