import express, {
  type Express,
  type NextFunction,
  type Request,
  type Response,
} from "express";

import { classify } from "./classifier.js";
import { DimensionMismatchError, perceptualDistance } from "./perceptual.js";
import { ImageDecodeError, decodeGrayPng } from "./png.js";

export interface ServerConfig {
  modelSeed: bigint;
  defaultLabels: string[];
  modelId: string;
  metricId: string;
}

export const DEFAULT_CONFIG: ServerConfig = {
  modelSeed: 7n,
  defaultLabels: ["cat", "dog", "car"],
  modelId: "hash-clip-v1-seed7",
  metricId: "pyramid-mad-v1",
};

function badRequest(res: Response, message: string): void {
  res.status(400).json({ error: message });
}

export function createApp(config: ServerConfig = DEFAULT_CONFIG): Express {
  const app = express();
  app.use(express.json({ limit: "32mb" }));

  app.get("/healthz", (_req, res) => {
    res.json({ ok: true, model_id: config.modelId });
  });

  app.post("/v1/predict", (req: Request, res: Response) => {
    const body = req.body;
    if (typeof body !== "object" || body === null) {
      return badRequest(res, "body must be a JSON object");
    }
    if (typeof body.image_png_b64 !== "string" || body.image_png_b64.length === 0) {
      return badRequest(res, "image_png_b64 must be a non-empty base64 string");
    }
    let labels = config.defaultLabels;
    if (body.labels !== undefined) {
      if (!Array.isArray(body.labels) || body.labels.length === 0 ||
          !body.labels.every((l: unknown) => typeof l === "string")) {
        return badRequest(res, "labels must be a non-empty array of strings");
      }
      labels = body.labels;
    }
    let img;
    try {
      img = decodeGrayPng(body.image_png_b64);
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        return void res.status(422).json({ error: err.message });
      }
      throw err;
    }
    const probs = classify(img, labels, config.modelSeed);
    res.json({ probs, model_id: config.modelId });
  });

  app.post("/v1/perceptual", (req: Request, res: Response) => {
    const body = req.body;
    if (typeof body !== "object" || body === null) {
      return badRequest(res, "body must be a JSON object");
    }
    for (const key of ["image_a_png_b64", "image_b_png_b64"]) {
      if (typeof body[key] !== "string" || body[key].length === 0) {
        return badRequest(res, `${key} must be a non-empty base64 string`);
      }
    }
    let a, b;
    try {
      a = decodeGrayPng(body.image_a_png_b64);
      b = decodeGrayPng(body.image_b_png_b64);
    } catch (err) {
      if (err instanceof ImageDecodeError) {
        return void res.status(422).json({ error: err.message });
      }
      throw err;
    }
    let distance: number;
    try {
      distance = perceptualDistance(a, b);
    } catch (err) {
      if (err instanceof DimensionMismatchError) {
        return badRequest(res, err.message);
      }
      throw err;
    }
    res.json({ distance });
  });

  // Malformed JSON and uncaught handler errors.
  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    const kind = (err as { type?: string }).type;
    if (kind === "entity.parse.failed" || err instanceof SyntaxError) {
      return badRequest(res, "request body is not valid JSON");
    }
    res.status(500).json({ error: err.message });
  });

  return app;
}
