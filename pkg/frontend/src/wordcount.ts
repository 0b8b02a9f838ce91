/** Client-side mirror of the server's essay word rule: words are maximal
 * non-whitespace runs, and essays need at least MIN_WORDS of them. The
 * server remains authoritative; this only reduces avoidable rejections. */

export const MIN_WORDS = 50;

export function countWords(text: string): number {
  const matches = text.match(/\S+/gu);
  return matches ? matches.length : 0;
}

export function meetsMinimum(text: string): boolean {
  return countWords(text) >= MIN_WORDS;
}
