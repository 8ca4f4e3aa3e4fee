// Minimal rolling line chart on a canvas; no chart library needed for one
// polyline over the last few minutes of samples.

export interface ChartPoint {
  x: number;
  y: number;
}

export function drawRollingChart(
  canvas: HTMLCanvasElement,
  points: ChartPoint[],
  yLabel: string,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) {
    return;
  }
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = '#222';
  ctx.fillStyle = '#666';
  ctx.font = '11px system-ui, sans-serif';

  if (points.length < 2) {
    ctx.fillText('waiting for data…', 8, height / 2);
    return;
  }

  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const ySpan = yMax - yMin || 1;
  const xSpan = xMax - xMin || 1;
  const pad = 6;

  ctx.beginPath();
  points.forEach((p, i) => {
    const px = pad + ((p.x - xMin) / xSpan) * (width - 2 * pad);
    const py = height - pad - ((p.y - yMin) / ySpan) * (height - 2 * pad);
    if (i === 0) {
      ctx.moveTo(px, py);
    } else {
      ctx.lineTo(px, py);
    }
  });
  ctx.stroke();
  ctx.fillText(`${yLabel}  [${yMin.toFixed(0)} – ${yMax.toFixed(0)}]`, 8, 14);
}
