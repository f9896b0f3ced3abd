import type {
  AnnotationDoc,
  AnnotationEntry,
  CrossJson,
  OverlaySettings,
  Point,
  SegmentJson,
} from './types.js';

export interface CommittedSegment {
  category: number | 'background';
  a: Point;
  b: Point;
}

export interface PlaceResult {
  committedSegment: boolean;
  crossCompleted: boolean;
  category: number | null;
}

function segJson(a: Point, b: Point): SegmentJson {
  return [
    [a.x, a.y],
    [b.x, b.y],
  ];
}

/**
 * Two-click segment entry: the first click stores an endpoint, the second
 * commits the straight segment. Two committed segments of the active
 * category form a cross, which is when the caller should request a
 * preview. All pseudo-mask math stays on the server; this class only
 * tracks clicks, committed geometry and overlay settings.
 */
export class UiSession {
  readonly imageId: string;
  readonly width: number;
  readonly height: number;

  activeCategory = 1;
  backgroundMode = false;
  pendingPoint: Point | null = null;
  segments: CommittedSegment[] = [];
  directionDeg: Map<number, number> = new Map();
  overlay: OverlaySettings = { sigmaRatio: 'inf', op: 'mul', opacity: 0.5 };
  lastError: string | null = null;

  constructor(imageId: string, width: number, height: number) {
    this.imageId = imageId;
    this.width = width;
    this.height = height;
  }

  private clamp(p: Point): Point {
    return {
      x: Math.min(Math.max(p.x, 0), this.width),
      y: Math.min(Math.max(p.y, 0), this.height),
    };
  }

  segmentsFor(category: number | 'background'): CommittedSegment[] {
    return this.segments.filter((s) => s.category === category);
  }

  /** Place one click; clamped to the image rectangle. */
  placePoint(raw: Point): PlaceResult {
    const p = this.clamp(raw);
    const target: number | 'background' = this.backgroundMode
      ? 'background'
      : this.activeCategory;
    const already = this.segmentsFor(target).length;
    const limit = target === 'background' ? 1 : 2;
    if (already >= limit) {
      this.lastError =
        target === 'background'
          ? 'background already has its segment'
          : `category ${target} already has a full cross`;
      return { committedSegment: false, crossCompleted: false, category: null };
    }
    if (this.pendingPoint === null) {
      this.pendingPoint = p;
      return { committedSegment: false, crossCompleted: false, category: null };
    }
    const a = this.pendingPoint;
    this.pendingPoint = null;
    if (a.x === p.x && a.y === p.y) {
      this.lastError = 'segment endpoints coincide';
      return { committedSegment: false, crossCompleted: false, category: null };
    }
    this.segments.push({ category: target, a, b: p });
    this.lastError = null;
    const crossCompleted =
      target !== 'background' && this.segmentsFor(target).length === 2;
    return {
      committedSegment: true,
      crossCompleted,
      category: target === 'background' ? null : target,
    };
  }

  /** Remove the pending point if any, otherwise the last committed segment. */
  undo(): boolean {
    if (this.pendingPoint !== null) {
      this.pendingPoint = null;
      return true;
    }
    if (this.segments.length > 0) {
      this.segments.pop();
      return true;
    }
    return false;
  }

  /** Categories whose cross is complete (two committed segments). */
  completeCategories(): number[] {
    const out: number[] = [];
    for (const s of this.segments) {
      if (s.category === 'background') continue;
      if (!out.includes(s.category) && this.segmentsFor(s.category).length === 2) {
        out.push(s.category);
      }
    }
    return out.sort((a, b) => a - b);
  }

  crossFor(category: number): CrossJson | null {
    const segs = this.segmentsFor(category);
    if (segs.length !== 2) return null;
    return {
      seg_ab: segJson(segs[0].a, segs[0].b),
      seg_cd: segJson(segs[1].a, segs[1].b),
    };
  }

  canExport(): boolean {
    return this.completeCategories().length > 0;
  }

  exportDoc(): AnnotationDoc {
    if (!this.canExport()) {
      throw new Error('no completed cross to export');
    }
    const entries: AnnotationEntry[] = [];
    for (const category of this.completeCategories()) {
      const cross = this.crossFor(category)!;
      const entry: AnnotationEntry = { category, cross };
      const dir = this.directionDeg.get(category);
      if (dir !== undefined) entry.direction_deg = dir;
      entries.push(entry);
    }
    const doc: AnnotationDoc = {
      schema_version: 1,
      image_ref: this.imageId,
      width: this.width,
      height: this.height,
      entries,
    };
    const bg = this.segmentsFor('background');
    if (bg.length === 1) {
      doc.background = { seg: segJson(bg[0].a, bg[0].b) };
    }
    return doc;
  }
}
