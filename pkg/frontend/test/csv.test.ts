import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";
import { parseBatch } from "../src/csv";
import { fixturePath } from "./helpers";

describe("parseBatch", () => {
  it("parses the 10-row fixture with a 5-row preview", () => {
    const text = readFileSync(fixturePath("batch10.csv"), "utf8");
    const parsed = parseBatch(text);
    expect(parsed.ok).toBe(true);
    expect(parsed.rows.length).toBe(10);
    expect(parsed.preview.length).toBe(5);
    expect(parsed.rows[0]).toEqual({
      timestamp: "2016-06-16T06:00:00Z", lat: 27.45, lon: -80.3
    });
  });

  it("maps alternate header spellings", () => {
    const parsed = parseBatch("time,latitude,lng,tide\n2016-06-16T06:00:00Z,27.45,-80.3,0.2\n");
    expect(parsed.ok).toBe(true);
    expect(parsed.rows[0]).toEqual({
      timestamp: "2016-06-16T06:00:00Z", lat: 27.45, lon: -80.3, tide: 0.2
    });
  });

  it("rejects empty files", () => {
    const parsed = parseBatch("   \n ");
    expect(parsed.ok).toBe(false);
    expect(parsed.diagnostics).toContain("file is empty");
  });

  it("rejects a header-only file", () => {
    const parsed = parseBatch("timestamp,lat,lon\n");
    expect(parsed.ok).toBe(false);
    expect(parsed.diagnostics.join(" ")).toMatch(/no rows/);
  });

  it("rejects files lacking a required column", () => {
    const parsed = parseBatch("timestamp,lon\n2016-06-16T06:00:00Z,-80.3\n");
    expect(parsed.ok).toBe(false);
    expect(parsed.diagnostics.join(" ")).toMatch(/lacks a lat column/);
  });

  it("passes value-level problems through for the service to report", () => {
    const parsed = parseBatch(
      "timestamp,lat,lon\nnot-a-date,27.45,-80.3\n2016-06-16T06:00:00Z,99.0,-80.3\n");
    expect(parsed.ok).toBe(true);
    expect(parsed.rows.length).toBe(2);
    expect(parsed.rows[0].timestamp).toBe("not-a-date");
    expect(parsed.rows[1].lat).toBe(99.0);
  });
});
