import type { ImputeRequest, ModelInfo } from "./types";

export interface FormInput {
  timestamp: string;
  lat: string;
  lon: string;
  tide: string; // optional override, empty means unset
}

export interface Validated {
  ok: boolean;
  errors: string[];
  request?: ImputeRequest;
}

// mirrors the service's ISO-8601 handling: trailing Z or offset,
// naive timestamps read as UTC
export function parseTimestamp(text: string): number | null {
  const t = text.trim();
  if (!t) return null;
  const hasZone = /(Z|[+-]\d{2}:?\d{2})$/.test(t);
  const ms = Date.parse(hasZone ? t : t + "Z");
  return Number.isNaN(ms) ? null : ms / 1000;
}

// client-side checks mirror the server's input ranges: timestamp
// format and global coordinate bounds.  Region membership is left to
// the server so its OutOfRegion code renders inline like any other
// service error.
export function validateForm(input: FormInput): Validated {
  const errors: string[] = [];

  if (parseTimestamp(input.timestamp) === null) {
    errors.push("timestamp must be ISO-8601, e.g. 2016-06-16T12:00:00Z");
  }

  const lat = Number(input.lat);
  const lon = Number(input.lon);
  if (input.lat.trim() === "" || Number.isNaN(lat)) {
    errors.push("lat must be a number");
  } else if (lat < -90 || lat > 90) {
    errors.push("lat must be within [-90, 90]");
  }
  if (input.lon.trim() === "" || Number.isNaN(lon)) {
    errors.push("lon must be a number");
  } else if (lon < -180 || lon > 180) {
    errors.push("lon must be within [-180, 180]");
  }

  let tide: number | undefined;
  if (input.tide.trim() !== "") {
    tide = Number(input.tide);
    if (Number.isNaN(tide)) errors.push("tide override must be a number");
  }

  if (errors.length > 0) return { ok: false, errors };
  const request: ImputeRequest = {
    timestamp: input.timestamp.trim(),
    lat,
    lon
  };
  if (tide !== undefined) request.tide = tide;
  return { ok: true, errors: [], request };
}

// non-blocking hint shown next to the form while typing
export function outsideRegion(lat: number, lon: number, info: ModelInfo | null): boolean {
  if (!info) return false;
  const r = info.region;
  return lat < r.lat_min || lat > r.lat_max || lon < r.lon_min || lon > r.lon_max;
}
