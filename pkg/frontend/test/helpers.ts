/** Test doubles: a scripted fetch and essay builders mirroring the course
 * rules (>= 50 words, no digits). */

import type { FetchLike } from "../src/api.js";

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export type Route = (url: string, init?: RequestInit) => Response | undefined;

export function scriptedFetch(
  routes: Route[],
  recorded: RecordedRequest[] = [],
): FetchLike {
  return async (url, init) => {
    recorded.push({
      url,
      method: init?.method ?? "GET",
      body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
    });
    for (const route of routes) {
      const response = route(url, init);
      if (response) return response;
    }
    throw new Error(`no scripted route for ${url}`);
  };
}

export function jsonResponse(payload: unknown, status = 200, headers?: HeadersInit): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json", ...(headers ?? {}) },
  });
}

const FILLER =
  "I will keep checking my reasoning and compare each step with the ideas from class before settling on an answer".split(
    " ",
  );

/** Plain-prose essay of exactly `words` words (digit- and symbol-free). */
export function essayOf(words: number, lead = "My plan is simple and careful."): string {
  const base = lead.split(" ");
  const out = [...base];
  let index = 0;
  while (out.length < words) {
    out.push(FILLER[index % FILLER.length] as string);
    index += 1;
  }
  return out.slice(0, Math.max(words, base.length)).join(" ");
}
