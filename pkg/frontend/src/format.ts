// Display formatting.  Values arrive as JSON numbers from the API; none of
// these helpers derive new quantities, they only render the ones we got.

export function formatUsd(amount: number): string {
  const rounded = Math.round(amount);
  const sign = rounded < 0 ? "-" : "";
  const digits = Math.abs(rounded).toString();
  let out = "";
  for (let i = 0; i < digits.length; i++) {
    const fromEnd = digits.length - i;
    out += digits[i];
    if (fromEnd > 1 && (fromEnd - 1) % 3 === 0) {
      out += ",";
    }
  }
  return `$${sign}${out}`;
}

export function formatDecimal(value: number, places = 3): string {
  return value.toFixed(places);
}

export function formatSignedDecimal(value: number, places = 3): string {
  const text = value.toFixed(places);
  return value > 0 ? `+${text}` : text;
}
