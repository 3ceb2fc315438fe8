/** Client-side validation of the Target / Value form fields. */

export interface ValidationResult {
  ok: boolean;
  value?: number;
  message?: string;
}

/** Blend weight values must be numbers in [0, 1]. */
export function validateValueField(raw: string): ValidationResult {
  const trimmed = raw.trim();
  if (trimmed === "") {
    return { ok: false, message: "enter a value in the range [0, 1]" };
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    return { ok: false, message: `"${raw}" is not a number` };
  }
  if (value < 0 || value > 1) {
    return {
      ok: false,
      message: `value ${value} outside the range [0, 1]`,
    };
  }
  return { ok: true, value };
}

/** Target channel must be an integer in [0, channelCount). */
export function validateTargetField(
  raw: string,
  channelCount: number,
): ValidationResult {
  const value = Number(raw.trim());
  if (!Number.isInteger(value)) {
    return { ok: false, message: `"${raw}" is not a channel index` };
  }
  if (value < 0 || value >= channelCount) {
    return {
      ok: false,
      message: `channel ${value} outside [0, ${channelCount - 1}]`,
    };
  }
  return { ok: true, value };
}
