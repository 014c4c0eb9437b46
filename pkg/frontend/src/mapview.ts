import { colorFor, gradientCss } from "./colors";
import type { ModelInfo } from "./types";

export interface MapPoint {
  lat: number;
  lon: number;
  salinity: number;
  label: string;
}

// Equirectangular view: marker position is linear in lon/lat within
// the padded region bounds.  The backdrop is a single web tile
// covering the region center; at estuary extents the projection
// mismatch with the tile is below marker size.
export class MapView {
  private pad = 0.15; // fraction of span added around the region

  constructor(readonly root: HTMLElement,
              readonly region: ModelInfo["region"]) {
    root.classList.add("mapview");
    root.style.position = "relative";
    root.style.overflow = "hidden";
    const tile = document.createElement("img");
    tile.className = "basemap";
    tile.alt = "basemap";
    tile.src = this.tileUrl();
    tile.style.position = "absolute";
    tile.style.inset = "0";
    tile.style.width = "100%";
    tile.style.height = "100%";
    root.appendChild(tile);
  }

  private bounds() {
    const r = this.region;
    const dLat = (r.lat_max - r.lat_min) * this.pad;
    const dLon = (r.lon_max - r.lon_min) * this.pad;
    return {
      latMin: r.lat_min - dLat, latMax: r.lat_max + dLat,
      lonMin: r.lon_min - dLon, lonMax: r.lon_max + dLon
    };
  }

  tileUrl(): string {
    const b = this.bounds();
    const lat = (b.latMin + b.latMax) / 2;
    const lon = (b.lonMin + b.lonMax) / 2;
    // zoom such that one 360/2^z degree tile roughly covers the view
    const span = Math.max(b.lonMax - b.lonMin, b.latMax - b.latMin);
    const zoom = Math.max(0, Math.min(17, Math.floor(Math.log2(360 / span)) - 1));
    const n = 2 ** zoom;
    const x = Math.floor(((lon + 180) / 360) * n);
    const latRad = (lat * Math.PI) / 180;
    const y = Math.floor(
      ((1 - Math.log(Math.tan(latRad) + 1 / Math.cos(latRad)) / Math.PI) / 2) * n);
    return `https://tile.openstreetmap.org/${zoom}/${x}/${y}.png`;
  }

  // percentage offsets for CSS positioning; y grows downward
  project(lat: number, lon: number): { xPct: number; yPct: number } {
    const b = this.bounds();
    const xPct = (100 * (lon - b.lonMin)) / (b.lonMax - b.lonMin);
    const yPct = (100 * (b.latMax - lat)) / (b.latMax - b.latMin);
    return { xPct, yPct };
  }

  // full redraw: marker colors depend on the shared domain
  render(points: MapPoint[], domain: { min: number; max: number }) {
    for (const el of Array.from(this.root.querySelectorAll(".marker"))) {
      el.remove();
    }
    for (const p of points) {
      const { xPct, yPct } = this.project(p.lat, p.lon);
      const m = document.createElement("div");
      m.className = "marker";
      m.title = p.label;
      m.dataset.salinity = String(p.salinity);
      m.style.position = "absolute";
      m.style.left = `${xPct}%`;
      m.style.top = `${yPct}%`;
      m.style.width = "12px";
      m.style.height = "12px";
      m.style.marginLeft = "-6px";
      m.style.marginTop = "-6px";
      m.style.borderRadius = "50%";
      m.style.border = "1px solid #222";
      m.style.background = colorFor(p.salinity, domain.min, domain.max);
      this.root.appendChild(m);
    }
  }
}

// legend endpoints always equal the rendered scale domain
export function renderLegend(root: HTMLElement,
                             domain: { min: number; max: number }) {
  root.innerHTML = "";
  root.classList.add("legend");
  const bar = document.createElement("div");
  bar.className = "legend-bar";
  bar.style.height = "12px";
  bar.style.background = gradientCss();
  const labels = document.createElement("div");
  labels.className = "legend-labels";
  labels.style.display = "flex";
  labels.style.justifyContent = "space-between";
  const lo = document.createElement("span");
  lo.className = "legend-min";
  lo.textContent = String(domain.min);
  const hi = document.createElement("span");
  hi.className = "legend-max";
  hi.textContent = String(domain.max);
  labels.append(lo, hi);
  root.append(bar, labels);
}
