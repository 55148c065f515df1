// Client for the flowmap inference service. The viewer only ever reads:
// GET /model/info and POST /trace.

export interface ModelInfo {
  dim: number;
  n_file_cycles: number;
  method: string;
  samples_per_map: number;
  bounds: number[][]; // [[min...], [max...]]
  activation: string;
  param_count: number;
  model_bytes: number | null;
}

export interface Trajectory {
  positions: number[][];
  valid: boolean[];
}

export interface TraceResponse {
  trajectories: Trajectory[];
  cycles: number[];
  inference_ms: number;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ApiError(`server unreachable: ${String(err)}`);
  }
  if (!resp.ok) {
    let detail = `${resp.status}`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = `${resp.status}: ${body.error}`;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(detail, resp.status);
  }
  return (await resp.json()) as T;
}

export function fetchModelInfo(baseUrl: string): Promise<ModelInfo> {
  return request<ModelInfo>(`${baseUrl}/model/info`);
}

export function postTrace(
  baseUrl: string,
  seeds: number[][],
  cycles: "all" | number[] = "all",
): Promise<TraceResponse> {
  return request<TraceResponse>(`${baseUrl}/trace`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ seeds, cycles }),
  });
}
