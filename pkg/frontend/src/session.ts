// Browser session: API client plus a timestamped read cache.
//
// The token lives in this object only (never persisted, never in the DOM
// or URLs), and every mutating call drops the whole cache so views
// re-fetch fresh state on their next poll.

import { ApiClient, type FetchLike } from "./api";

interface CacheEntry {
  data: unknown;
  fetchedAt: number;
}

export const POLL_INTERVAL_MS = 3000;

export class UiSession {
  readonly api: ApiClient;
  private cache = new Map<string, CacheEntry>();

  constructor(
    readonly baseUrl: string,
    token: string,
    fetchFn?: FetchLike,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.api = new ApiClient(baseUrl, token, fetchFn);
  }

  /** Cached read: re-fetches once the entry is older than maxAgeMs. */
  async load<T>(key: string, loader: (api: ApiClient) => Promise<T>, maxAgeMs = POLL_INTERVAL_MS): Promise<T> {
    const hit = this.cache.get(key);
    if (hit && this.now() - hit.fetchedAt < maxAgeMs) {
      return hit.data as T;
    }
    const data = await loader(this.api);
    this.cache.set(key, { data, fetchedAt: this.now() });
    return data;
  }

  /** Mutating call: runs it, then invalidates every cached read. */
  async mutate<T>(action: (api: ApiClient) => Promise<T>): Promise<T> {
    const result = await action(this.api);
    this.invalidate();
    return result;
  }

  invalidate(key?: string): void {
    if (key === undefined) {
      this.cache.clear();
    } else {
      this.cache.delete(key);
    }
  }

  cachedKeys(): string[] {
    return [...this.cache.keys()];
  }
}
