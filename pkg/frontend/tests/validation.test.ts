import { describe, expect, it } from "vitest";

import {
  validateTargetField,
  validateValueField,
} from "../src/validation.js";

describe("value field", () => {
  it("accepts values in [0, 1]", () => {
    expect(validateValueField("0")).toEqual({ ok: true, value: 0 });
    expect(validateValueField("1")).toEqual({ ok: true, value: 1 });
    expect(validateValueField(" 0.65 ")).toEqual({ ok: true, value: 0.65 });
  });

  it("rejects out-of-range values with a message citing the range", () => {
    const over = validateValueField("1.5");
    expect(over.ok).toBe(false);
    expect(over.message).toContain("[0, 1]");
    const under = validateValueField("-0.2");
    expect(under.ok).toBe(false);
    expect(under.message).toContain("[0, 1]");
  });

  it("rejects non-numeric and empty input", () => {
    expect(validateValueField("abc").ok).toBe(false);
    expect(validateValueField("").ok).toBe(false);
    expect(validateValueField("NaN").ok).toBe(false);
  });
});

describe("target field", () => {
  it("accepts valid channel indices", () => {
    expect(validateTargetField("0", 5)).toEqual({ ok: true, value: 0 });
    expect(validateTargetField("4", 5)).toEqual({ ok: true, value: 4 });
  });

  it("rejects out-of-range and fractional indices", () => {
    expect(validateTargetField("5", 5).ok).toBe(false);
    expect(validateTargetField("-1", 5).ok).toBe(false);
    expect(validateTargetField("1.5", 5).ok).toBe(false);
    expect(validateTargetField("x", 5).ok).toBe(false);
  });
});
