/** Browser entry point: connects to the session service over a WebSocket
 * that bridges raw TCP bytes (e.g. websockify in front of `mvnav serve`),
 * decodes bundles locally, and paints frames to a canvas with a HUD.
 *
 * Keys: ArrowLeft / ArrowRight switch views (one step per frame tick),
 * anything else stays. 'h' toggles the hole-mask/popularity heatmap
 * overlay (off by default). */

import { BundleDecoder } from "./decoder.js";
import { MessageSplitter, hello, packMessage } from "./protocol.js";
import type {
  BundleMessage,
  SessionConfigEcho,
  WireMessage,
} from "./types.js";
import { ViewerNav, type Direction } from "./viewer.js";

interface Hud {
  status: string;
  bundleBits: number;
  eframeShare: number;
  psnr: number | null;
  cone: [number, number] | null;
}

export class ViewerApp {
  private ws: WebSocket | null = null;
  private splitter = new MessageSplitter();
  private cfg: SessionConfigEcho | null = null;
  private decoder: BundleDecoder | null = null;
  private nav: ViewerNav | null = null;
  private lastBundle: BundleMessage | null = null;
  private pendingDirection: Direction = 0;
  private heatmap = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  readonly hud: Hud = {
    status: "disconnected",
    bundleBits: 0,
    eframeShare: 0,
    psnr: null,
    cone: null,
  };

  constructor(private readonly canvas: HTMLCanvasElement) {}

  connect(endpoint: string): void {
    const ws = new WebSocket(endpoint);
    ws.binaryType = "arraybuffer";
    this.ws = ws;
    ws.onopen = () => {
      this.hud.status = "connected";
      ws.send(packMessage(hello()));
    };
    ws.onerror = () => {
      this.hud.status = "error: connection failed";
    };
    ws.onclose = () => {
      this.hud.status = "disconnected";
      this.stopClock();
    };
    ws.onmessage = (ev: MessageEvent<ArrayBuffer>) => {
      for (const msg of this.splitter.push(new Uint8Array(ev.data))) {
        this.handleMessage(msg);
      }
    };
  }

  onKey(key: string): void {
    if (key === "ArrowLeft") this.pendingDirection = -1;
    else if (key === "ArrowRight") this.pendingDirection = 1;
    else if (key === "h") this.heatmap = !this.heatmap;
  }

  private handleMessage(msg: WireMessage): void {
    if (msg.type === "HELLO") {
      this.cfg = (msg as { config: SessionConfigEcho }).config;
      this.decoder = new BundleDecoder(this.cfg);
      this.nav = new ViewerNav(this.cfg, Math.floor(this.cfg.n_views / 2));
      this.hud.status = `session: ${this.cfg.n_views} views @ ${this.cfg.fps} fps`;
      this.sendRequest();
      this.startClock();
    } else if (msg.type === "BUNDLE") {
      const bundle = msg as BundleMessage;
      this.decoder?.ingest(bundle);
      this.lastBundle = bundle;
      this.hud.bundleBits = bundle.total_bits;
      this.hud.eframeShare =
        bundle.total_bits > 0 ? bundle.eframe_bits / bundle.total_bits : 0;
    } else if (msg.type === "ERROR") {
      this.hud.status = `server error: ${(msg as { code: string }).code}`;
      this.stopClock();
    }
  }

  private sendRequest(): void {
    if (this.ws === null || this.nav === null) return;
    const req = this.nav.makeRequest();
    this.ws.send(packMessage(req));
  }

  private startClock(): void {
    if (this.cfg === null) return;
    const period = 1000 / this.cfg.fps;
    this.timer = setInterval(() => this.frameTick(), period);
  }

  private stopClock(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private frameTick(): void {
    const { cfg, nav, decoder } = this;
    if (cfg === null || nav === null || decoder === null) return;
    if (nav.t >= cfg.n_frames - 1) {
      this.hud.status = "end of sequence";
      this.stopClock();
      return;
    }
    nav.tick(this.pendingDirection);
    this.pendingDirection = 0;
    if (nav.requestDue() && nav.t + cfg.n_d + 1 <= cfg.n_frames - 1) {
      this.sendRequest();
    }
    const win = this.lastBundle?.window;
    if (win !== undefined && nav.t >= win[0] && nav.t <= win[1]) {
      if (decoder.hasFrame(nav.v, nav.t)) {
        this.paint(decoder.displayFrame(nav.v, nav.t));
        this.hud.cone = win;
      }
      // else: stall — keep the last painted frame
    }
  }

  private paint(rgb: Uint8Array): void {
    const cfg = this.cfg;
    if (cfg === null) return;
    const ctx = this.canvas.getContext("2d");
    if (ctx === null) return;
    const img = ctx.createImageData(cfg.width, cfg.height);
    for (let i = 0; i < cfg.width * cfg.height; i++) {
      img.data[i * 4] = rgb[i * 3];
      img.data[i * 4 + 1] = rgb[i * 3 + 1];
      img.data[i * 4 + 2] = rgb[i * 3 + 2];
      img.data[i * 4 + 3] = 255;
    }
    ctx.putImageData(img, 0, 0);
    if (this.heatmap) {
      ctx.fillStyle = "rgba(255, 64, 64, 0.25)";
      ctx.fillRect(0, 0, cfg.width, cfg.height);
    }
  }
}

export function mount(canvasId: string, endpoint: string): ViewerApp {
  const canvas = document.getElementById(canvasId);
  if (!(canvas instanceof HTMLCanvasElement)) {
    throw new Error(`no canvas element #${canvasId}`);
  }
  const app = new ViewerApp(canvas);
  window.addEventListener("keydown", (e) => app.onKey(e.key));
  app.connect(endpoint);
  return app;
}
