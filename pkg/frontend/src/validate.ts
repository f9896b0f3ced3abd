/**
 * Minimal validator for the subset of JSON Schema used by the shared
 * annotation schema (type/required/properties/items/min-max items,
 * additionalProperties, const, minimum, $ref into $defs). Enough to check
 * exported documents against the same file the Python side validates with.
 */

type Schema = Record<string, unknown>;

function resolveRef(root: Schema, ref: string): Schema {
  if (!ref.startsWith('#/')) throw new Error(`unsupported $ref ${ref}`);
  let node: unknown = root;
  for (const part of ref.slice(2).split('/')) {
    node = (node as Record<string, unknown>)[part];
    if (node === undefined) throw new Error(`dangling $ref ${ref}`);
  }
  return node as Schema;
}

export function validate(
  value: unknown,
  schema: Schema,
  root?: Schema,
  path = '$',
): string[] {
  const errors: string[] = [];
  const base = root ?? schema;
  if (typeof schema.$ref === 'string') {
    return validate(value, resolveRef(base, schema.$ref), base, path);
  }
  const type = schema.type as string | undefined;
  if (type === 'object') {
    if (typeof value !== 'object' || value === null || Array.isArray(value)) {
      return [`${path}: expected object`];
    }
    const obj = value as Record<string, unknown>;
    for (const req of (schema.required as string[] | undefined) ?? []) {
      if (!(req in obj)) errors.push(`${path}: missing required '${req}'`);
    }
    const props = (schema.properties as Record<string, Schema>) ?? {};
    for (const [key, sub] of Object.entries(props)) {
      if (key in obj) errors.push(...validate(obj[key], sub, base, `${path}.${key}`));
    }
    if (schema.additionalProperties === false) {
      for (const key of Object.keys(obj)) {
        if (!(key in props)) errors.push(`${path}: unexpected property '${key}'`);
      }
    }
  } else if (type === 'array') {
    if (!Array.isArray(value)) return [`${path}: expected array`];
    const min = schema.minItems as number | undefined;
    const max = schema.maxItems as number | undefined;
    if (min !== undefined && value.length < min) {
      errors.push(`${path}: fewer than ${min} items`);
    }
    if (max !== undefined && value.length > max) {
      errors.push(`${path}: more than ${max} items`);
    }
    const items = schema.items as Schema | undefined;
    if (items) {
      value.forEach((v, i) => errors.push(...validate(v, items, base, `${path}[${i}]`)));
    }
  } else if (type === 'integer' || type === 'number') {
    if (typeof value !== 'number' || (type === 'integer' && !Number.isInteger(value))) {
      return [`${path}: expected ${type}`];
    }
    const minimum = schema.minimum as number | undefined;
    if (minimum !== undefined && value < minimum) {
      errors.push(`${path}: below minimum ${minimum}`);
    }
  } else if (type === 'string') {
    if (typeof value !== 'string') return [`${path}: expected string`];
    const minLength = schema.minLength as number | undefined;
    if (minLength !== undefined && value.length < minLength) {
      errors.push(`${path}: shorter than ${minLength}`);
    }
  } else if (type === 'boolean') {
    if (typeof value !== 'boolean') return [`${path}: expected boolean`];
  }
  if ('const' in schema && value !== schema.const) {
    errors.push(`${path}: expected const ${JSON.stringify(schema.const)}`);
  }
  return errors;
}
