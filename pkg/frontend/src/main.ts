/**
 * Canvas annotation tool: pick an image, click two endpoints per segment,
 * see the live pseudo-mask overlay rendered by the service, and export or
 * save the annotation document. All mask math happens server-side; the
 * overlay pixels are exactly the service's PNG.
 */
import { ServiceClient } from './api.js';
import { UiSession } from './session.js';
import type { ImageInfo } from './types.js';

const CATEGORY_COLORS = ['#2ecc71', '#e67e22', '#9b59b6', '#e74c3c'];
const BACKGROUND_COLOR = '#f1c40f';

interface AppState {
  client: ServiceClient;
  session: UiSession | null;
  image: HTMLImageElement | null;
  overlayImage: HTMLImageElement | null;
  previewToken: number;
  previewTimer: number | null;
  baseVersion: number;
}

const state: AppState = {
  client: new ServiceClient(defaultServiceUrl()),
  session: null,
  image: null,
  overlayImage: null,
  previewToken: 0,
  previewTimer: null,
  baseVersion: 0,
};

function defaultServiceUrl(): string {
  if (window.location.protocol.startsWith('http')) {
    return window.location.origin;
  }
  return 'http://127.0.0.1:8000';
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function banner(message: string | null, kind: 'error' | 'info' = 'error'): void {
  const box = el<HTMLDivElement>('banner');
  if (!message) {
    box.style.display = 'none';
    return;
  }
  box.textContent = message;
  box.className = `banner ${kind}`;
  box.style.display = 'block';
}

async function refreshImages(): Promise<void> {
  const list = el<HTMLUListElement>('image-list');
  list.textContent = '';
  let images: ImageInfo[] = [];
  try {
    images = await state.client.listImages();
  } catch (err) {
    banner(`cannot reach service: ${String(err)}`);
    return;
  }
  for (const info of images) {
    const item = document.createElement('li');
    item.textContent = `${info.id} (${info.width}x${info.height})`;
    item.onclick = () => void openImage(info);
    list.appendChild(item);
  }
  banner(null);
}

async function openImage(info: ImageInfo): Promise<void> {
  state.session = new UiSession(info.id, info.width, info.height);
  state.overlayImage = null;
  state.baseVersion = 0;
  const existing = await state.client.getAnnotation(info.id).catch(() => null);
  if (existing) state.baseVersion = existing.version;

  const img = new Image();
  img.crossOrigin = 'anonymous';
  img.onload = () => {
    state.image = img;
    const canvas = el<HTMLCanvasElement>('canvas');
    canvas.width = info.width;
    canvas.height = info.height;
    syncControls();
    draw();
  };
  img.src = state.client.imageUrl(info.id);
}

function syncControls(): void {
  const session = state.session;
  if (!session) return;
  el<HTMLSelectElement>('sigma').value = String(session.overlay.sigmaRatio);
  el<HTMLSelectElement>('op').value = session.overlay.op;
  el<HTMLInputElement>('opacity').value = String(session.overlay.opacity);
  el<HTMLButtonElement>('export').disabled = !session.canExport();
  el<HTMLButtonElement>('save').disabled = !session.canExport();
}

function draw(): void {
  const canvas = el<HTMLCanvasElement>('canvas');
  const ctx = canvas.getContext('2d');
  const session = state.session;
  if (!ctx || !session) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (state.image) ctx.drawImage(state.image, 0, 0);
  if (state.overlayImage) {
    ctx.save();
    ctx.globalAlpha = session.overlay.opacity;
    ctx.drawImage(state.overlayImage, 0, 0);
    ctx.restore();
  }
  for (const seg of session.segments) {
    ctx.strokeStyle =
      seg.category === 'background'
        ? BACKGROUND_COLOR
        : CATEGORY_COLORS[(seg.category - 1) % CATEGORY_COLORS.length];
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(seg.a.x, seg.a.y);
    ctx.lineTo(seg.b.x, seg.b.y);
    ctx.stroke();
  }
  if (session.pendingPoint) {
    ctx.fillStyle = '#3498db';
    ctx.beginPath();
    ctx.arc(session.pendingPoint.x, session.pendingPoint.y, 3, 0, Math.PI * 2);
    ctx.fill();
  }
}

function schedulePreview(category: number): void {
  // debounce; the latest response wins via the token
  if (state.previewTimer !== null) window.clearTimeout(state.previewTimer);
  state.previewTimer = window.setTimeout(() => {
    state.previewTimer = null;
    void requestPreview(category);
  }, 150);
}

async function requestPreview(category: number): Promise<void> {
  const session = state.session;
  if (!session) return;
  const cross = session.crossFor(category);
  if (!cross) return;
  const token = ++state.previewToken;
  try {
    const preview = await state.client.preview(
      cross,
      session.overlay.sigmaRatio,
      session.overlay.op,
      session.width,
      session.height,
      session.directionDeg.get(category),
    );
    if (token !== state.previewToken) return; // a newer request finished
    const overlay = new Image();
    overlay.onload = () => {
      state.overlayImage = overlay;
      draw();
    };
    overlay.src = `data:image/png;base64,${preview.mask_png_base64}`;
    const note = preview.branch_index
      ? `, branch ${preview.branch_index}`
      : '';
    banner(
      `mask ${preview.area_px} px, relative size ` +
        `${preview.relative_size.toFixed(4)}${note}`,
      'info',
    );
  } catch (err) {
    if (token !== state.previewToken) return;
    state.overlayImage = null;
    draw();
    banner(`invalid cross: ${String(err)}`);
  }
}

function onCanvasClick(event: MouseEvent): void {
  const session = state.session;
  if (!session) return;
  const canvas = el<HTMLCanvasElement>('canvas');
  const rect = canvas.getBoundingClientRect();
  const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
  const result = session.placePoint({ x, y });
  if (session.lastError) banner(session.lastError);
  if (result.crossCompleted && result.category !== null) {
    schedulePreview(result.category);
  }
  syncControls();
  draw();
}

function wireControls(): void {
  el<HTMLInputElement>('service-url').value = state.client.baseUrl;
  el<HTMLButtonElement>('connect').onclick = () => {
    state.client = new ServiceClient(el<HTMLInputElement>('service-url').value);
    void refreshImages();
  };
  el<HTMLCanvasElement>('canvas').onclick = onCanvasClick;

  for (let cat = 1; cat <= CATEGORY_COLORS.length; cat += 1) {
    const button = el<HTMLButtonElement>(`cat-${cat}`);
    button.style.borderColor = CATEGORY_COLORS[cat - 1];
    button.onclick = () => {
      const session = state.session;
      if (!session) return;
      session.backgroundMode = false;
      session.activeCategory = cat;
      banner(`category ${cat} active`, 'info');
    };
  }
  el<HTMLButtonElement>('background-mode').onclick = () => {
    const session = state.session;
    if (!session) return;
    session.backgroundMode = !session.backgroundMode;
    banner(
      session.backgroundMode ? 'background segment mode' : 'category mode',
      'info',
    );
  };
  el<HTMLButtonElement>('undo').onclick = () => {
    const session = state.session;
    if (!session) return;
    session.undo();
    const complete = session.completeCategories();
    if (complete.length > 0) {
      schedulePreview(complete[complete.length - 1]);
    } else {
      state.overlayImage = null;
    }
    syncControls();
    draw();
  };
  el<HTMLSelectElement>('sigma').onchange = (ev) => {
    const session = state.session;
    if (!session) return;
    const raw = (ev.target as HTMLSelectElement).value;
    session.overlay.sigmaRatio = raw === 'inf' ? 'inf' : Number(raw);
    const complete = session.completeCategories();
    if (complete.length > 0) schedulePreview(complete[complete.length - 1]);
  };
  el<HTMLSelectElement>('op').onchange = (ev) => {
    const session = state.session;
    if (!session) return;
    session.overlay.op = (ev.target as HTMLSelectElement).value as
      | 'mul'
      | 'add'
      | 'max';
    const complete = session.completeCategories();
    if (complete.length > 0) schedulePreview(complete[complete.length - 1]);
  };
  el<HTMLInputElement>('opacity').oninput = (ev) => {
    const session = state.session;
    if (!session) return;
    session.overlay.opacity = Number((ev.target as HTMLInputElement).value);
    draw();
  };
  el<HTMLInputElement>('direction').onchange = (ev) => {
    const session = state.session;
    if (!session) return;
    const raw = (ev.target as HTMLInputElement).value.trim();
    if (raw === '') {
      session.directionDeg.delete(session.activeCategory);
    } else {
      session.directionDeg.set(session.activeCategory, Number(raw));
    }
    const complete = session.completeCategories();
    if (complete.includes(session.activeCategory)) {
      schedulePreview(session.activeCategory);
    }
  };
  el<HTMLButtonElement>('export').onclick = () => {
    const session = state.session;
    if (!session || !session.canExport()) return;
    const doc = session.exportDoc();
    const blob = new Blob([JSON.stringify(doc, null, 2) + '\n'], {
      type: 'application/json',
    });
    const a = document.createElement('a');
    a.href = URL.createObjectURL(blob);
    a.download = session.imageId.replace(/\.[^.]+$/, '') + '.json';
    a.click();
    URL.revokeObjectURL(a.href);
  };
  el<HTMLButtonElement>('save').onclick = () => {
    const session = state.session;
    if (!session || !session.canExport()) return;
    void state.client
      .saveAnnotation(session.imageId, session.exportDoc(), state.baseVersion)
      .then((version) => {
        state.baseVersion = version;
        banner(`saved version ${version}`, 'info');
      })
      .catch((err) => banner(String(err)));
  };
}

wireControls();
void refreshImages();
