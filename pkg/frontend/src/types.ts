/** Shared message and configuration shapes of the wire protocol. */

export interface CameraConfig {
  /** 3x3 intrinsic matrix. */
  k: number[][];
  /** 3x3 world-to-camera rotation. */
  r: number[][];
  /** translation 3-vector. */
  t: number[];
}

export interface SessionConfigEcho {
  width: number;
  height: number;
  n_frames: number;
  fps: number;
  z_near: number;
  z_far: number;
  n_ref_views: number;
  n_intermediate: number;
  n_views: number;
  block_size: number;
  gop_size: number;
  n_refs: number;
  ladder: number[];
  ref_q: number;
  cameras: CameraConfig[];
  n_t: number;
  n_d: number;
  budget: number;
  model: { p1: number; p2: number; p3: number };
}

export type FrameRole = "ref_color" | "ref_depth" | "eframe";
export type FrameKind = "intra" | "predicted" | "residual";

export interface FrameEntry {
  role: FrameRole;
  v: number;
  t: number;
  kind: FrameKind;
  q: number;
  bits: number;
  channels: number;
  width: number;
  height: number;
  /** base64 codec payload */
  data: string;
}

export interface BundleMessage {
  type: "BUNDLE";
  request_id: number;
  window: [number, number];
  frames: FrameEntry[];
  allocation: { v: number; t: number; bits: number; mse: number; q: number; pop: number }[];
  total_bits: number;
  ref_color_bits: number;
  depth_bits: number;
  eframe_bits: number;
}

export interface ErrorMessage {
  type: "ERROR";
  code: string;
  detail: string;
}

export interface HelloMessage {
  type: "HELLO";
  config: Partial<SessionConfigEcho>;
}

export interface RequestMessage {
  type: "REQUEST";
  t0: number;
  v: number;
  prev_v: number;
}

export type WireMessage =
  | HelloMessage
  | RequestMessage
  | BundleMessage
  | ErrorMessage
  | { type: "FRAME_ACK"; t: number; v: number; psnr: number }
  | { type: string; [key: string]: unknown };
