import type {
  AnnotationDoc,
  CrossJson,
  ImageInfo,
  PreviewResponse,
} from './types.js';

/** Thin fetch client for the annotation service endpoints. */
export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  async listImages(): Promise<ImageInfo[]> {
    const resp = await fetch(this.url('/api/images'));
    if (!resp.ok) throw new Error(`list images failed: ${resp.status}`);
    return (await resp.json()) as ImageInfo[];
  }

  imageUrl(id: string): string {
    return this.url(`/api/images/${id}`);
  }

  async preview(
    cross: CrossJson,
    sigmaRatio: number | 'inf',
    op: string,
    width: number,
    height: number,
    directionDeg?: number,
  ): Promise<PreviewResponse> {
    const body = {
      cross: directionDeg === undefined ? cross : { ...cross, direction_deg: directionDeg },
      sigma_ratio: sigmaRatio,
      op,
      width,
      height,
    };
    const resp = await fetch(this.url('/api/preview'), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      const detail = await resp
        .json()
        .then((d) => (d as { detail?: string }).detail ?? `${resp.status}`)
        .catch(() => `${resp.status}`);
      throw new Error(detail);
    }
    return (await resp.json()) as PreviewResponse;
  }

  async saveAnnotation(
    imageId: string,
    doc: AnnotationDoc,
    baseVersion: number,
  ): Promise<number> {
    const resp = await fetch(this.url(`/api/annotations/${imageId}`), {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ doc, base_version: baseVersion }),
    });
    if (!resp.ok) {
      const detail = await resp
        .json()
        .then((d) => (d as { detail?: string }).detail ?? `${resp.status}`)
        .catch(() => `${resp.status}`);
      throw new Error(`save failed (${resp.status}): ${detail}`);
    }
    return ((await resp.json()) as { version: number }).version;
  }

  async getAnnotation(
    imageId: string,
  ): Promise<{ doc: AnnotationDoc; version: number } | null> {
    const resp = await fetch(this.url(`/api/annotations/${imageId}`));
    if (resp.status === 404) return null;
    if (!resp.ok) throw new Error(`get annotation failed: ${resp.status}`);
    return (await resp.json()) as { doc: AnnotationDoc; version: number };
  }
}
