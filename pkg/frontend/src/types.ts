export interface ModelInfo {
  model_version: string;
  checkpoint_path: string;
  config_digest: string;
  feature_names: string[];
  uses_tide: boolean;
  region: { lat_min: number; lat_max: number; lon_min: number; lon_max: number };
  stats: { mu: number; sigma: number };
}

export interface ImputeRequest {
  timestamp: string;
  lat: number;
  lon: number;
  tide?: number;
}

export interface ImputeResult {
  salinity: number;
  tide_used: number;
  tide_source: string;
  model_version: string;
}

export interface ApiError {
  code: string;
  message: string;
}

export interface BatchRow {
  index: number;
  ok: boolean;
  result?: ImputeResult;
  error?: ApiError;
}

export interface BatchResponse {
  model_version: string;
  results: BatchRow[];
}

// one table row; requestId orders rows by submission, not arrival
export interface ResultRow {
  requestId: number;
  request: ImputeRequest;
  status: "pending" | "ok" | "error";
  result?: ImputeResult;
  error?: ApiError;
}
