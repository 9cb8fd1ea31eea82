import { describe, expect, it } from "vitest";
import { formatDecimal, formatSignedDecimal, formatUsd } from "../src/format.js";

describe("formatUsd", () => {
  it("groups thousands with commas", () => {
    expect(formatUsd(2523)).toBe("$2,523");
    expect(formatUsd(157052)).toBe("$157,052");
    expect(formatUsd(1362)).toBe("$1,362");
    expect(formatUsd(1000000)).toBe("$1,000,000");
  });

  it("handles small and zero amounts", () => {
    expect(formatUsd(0)).toBe("$0");
    expect(formatUsd(999)).toBe("$999");
  });

  it("rounds fractional dollars", () => {
    expect(formatUsd(2522.92)).toBe("$2,523");
    expect(formatUsd(748728.89)).toBe("$748,729");
  });
});

describe("decimals", () => {
  it("renders plain and signed fixed-point", () => {
    expect(formatDecimal(1.6830371, 3)).toBe("1.683");
    expect(formatSignedDecimal(0.117969)).toBe("+0.118");
    expect(formatSignedDecimal(-0.0052)).toBe("-0.005");
    expect(formatSignedDecimal(0)).toBe("0.000");
  });
});
