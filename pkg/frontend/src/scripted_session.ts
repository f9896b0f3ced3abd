/**
 * Headless scripted UI session for end-to-end parity checks: performs the
 * two-click segment workflow through the same session and client code the
 * canvas UI uses, saves the final preview overlay and the exported
 * annotation document, and persists the annotation through the service.
 *
 * Usage: node scripted_session.js --service http://host:port \
 *          --image img_0.png --out /tmp/session
 */
import { mkdir, writeFile } from 'node:fs/promises';
import { join } from 'node:path';
import process from 'node:process';

import { ServiceClient } from './api.js';
import { UiSession } from './session.js';

function arg(name: string): string {
  const i = process.argv.indexOf(`--${name}`);
  if (i < 0 || i + 1 >= process.argv.length) {
    throw new Error(`missing --${name}`);
  }
  return process.argv[i + 1];
}

async function main(): Promise<void> {
  const client = new ServiceClient(arg('service'));
  const imageId = arg('image');
  const outDir = arg('out');
  await mkdir(outDir, { recursive: true });

  const images = await client.listImages();
  const info = images.find((i) => i.id === imageId);
  if (!info) throw new Error(`image ${imageId} not listed by the service`);

  const session = new UiSession(info.id, info.width, info.height);
  session.overlay = { sigmaRatio: 1.5, op: 'mul', opacity: 0.5 };

  // two-click entry of two nearly perpendicular segments through the middle
  const cx = info.width / 2;
  const cy = info.height / 2;
  const clicks = [
    { x: cx + 3.0, y: cy - 18.0 },
    { x: cx - 2.0, y: cy + 22.0 },
    { x: cx - 25.0, y: cy + 1.5 },
    { x: cx + 21.0, y: cy - 3.0 },
  ];
  let completed = false;
  for (const click of clicks) {
    const result = session.placePoint(click);
    completed = result.crossCompleted;
  }
  if (!completed) throw new Error('cross was not completed by the clicks');

  const cross = session.crossFor(session.activeCategory);
  if (!cross) throw new Error('no cross recorded');
  const preview = await client.preview(
    cross,
    session.overlay.sigmaRatio,
    session.overlay.op,
    info.width,
    info.height,
  );
  await writeFile(
    join(outDir, 'overlay.png'),
    Buffer.from(preview.mask_png_base64, 'base64'),
  );

  const doc = session.exportDoc();
  await writeFile(
    join(outDir, 'annotation.json'),
    JSON.stringify(doc, null, 2) + '\n',
  );
  const version = await client.saveAnnotation(info.id, doc, 0);
  await writeFile(
    join(outDir, 'result.json'),
    JSON.stringify(
      { version, area_px: preview.area_px, relative_size: preview.relative_size },
      null,
      2,
    ) + '\n',
  );
  console.log(
    `session complete: version ${version}, area ${preview.area_px} px`,
  );
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
