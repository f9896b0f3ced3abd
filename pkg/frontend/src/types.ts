export interface Point {
  x: number;
  y: number;
}

/** Two endpoints as [[x, y], [x, y]], matching the annotation schema. */
export type SegmentJson = [[number, number], [number, number]];

export interface CrossJson {
  seg_ab: SegmentJson;
  seg_cd: SegmentJson;
}

export interface AnnotationEntry {
  category: number;
  cross: CrossJson;
  direction_deg?: number;
}

export interface AnnotationDoc {
  schema_version: 1;
  image_ref: string;
  width: number;
  height: number;
  entries: AnnotationEntry[];
  background?: { seg: SegmentJson };
}

export interface ImageInfo {
  id: string;
  width: number;
  height: number;
}

export interface PreviewResponse {
  mask_png_base64: string;
  area_px: number;
  relative_size: number;
  branch_index?: number;
}

export interface OverlaySettings {
  sigmaRatio: number | 'inf';
  op: 'mul' | 'add' | 'max';
  opacity: number;
}
