/** Typed client for the index HTTP API. Every number shown in the UI comes
 * from these payloads; the client never recomputes model quantities. */

export type Triple = [number, number, number]; // positive, negative, neutral

export interface TopicSummary {
  id: number;
  overall_proportion: number;
  slice_proportions: number[];
  top_words: { term: string; weight: number }[];
}

export interface TopicDetail extends TopicSummary {
  sentiment: Triple | null;
}

export interface WordEntry {
  term: string;
  weight: number;
  sentiment: Triple | null;
}

export interface DocEntry {
  id: string;
  membership: number;
  title: string;
  date: string;
  n_tokens: number;
}

export interface DocDetail {
  id: string;
  title: string;
  content: string;
  date: string;
  url: string | null;
  slice: number;
  n_tokens: number;
  topics: { topic: number; membership: number }[];
}

export interface WordTopics {
  term: string;
  id: number;
  frequency: number;
  topics: { topic: number; weight: number; rank: number }[];
}

export interface SliceInfo {
  index: number;
  window: string;
  empty: boolean;
  n_docs: number;
}

export interface SlicesPayload {
  granularity: string;
  slices: SliceInfo[];
}

export interface EmbeddingSlice {
  window: string;
  topics: { topic_id: number; x: number; y: number }[];
}

export interface TopicSentiment {
  overall: Triple | null;
  slices: (Triple | null)[];
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private async get<T>(path: string, signal?: AbortSignal): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.base + path, { signal });
    } catch (err) {
      if ((err as Error).name === "AbortError") throw err;
      throw new ApiError(0, "unreachable", `API unreachable: ${err}`);
    }
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body.code ?? "error",
        body.message ?? resp.statusText);
    }
    return body as T;
  }

  topics(signal?: AbortSignal): Promise<TopicSummary[]> {
    return this.get("/topics", signal);
  }

  topic(k: number, signal?: AbortSignal): Promise<TopicDetail> {
    return this.get(`/topics/${k}`, signal);
  }

  topicWords(k: number, slice: number | null, limit = 50,
             signal?: AbortSignal): Promise<WordEntry[]> {
    const q = slice === null ? "" : `slice=${slice}&`;
    return this.get(`/topics/${k}/words?${q}limit=${limit}`, signal);
  }

  topicDocs(k: number, slice: number | null,
            signal?: AbortSignal): Promise<DocEntry[]> {
    const q = slice === null ? "" : `?slice=${slice}`;
    return this.get(`/topics/${k}/docs${q}`, signal);
  }

  topicSentiment(k: number, signal?: AbortSignal): Promise<TopicSentiment> {
    return this.get(`/topics/${k}/sentiment`, signal);
  }

  doc(id: string, signal?: AbortSignal): Promise<DocDetail> {
    return this.get(`/docs/${encodeURIComponent(id)}`, signal);
  }

  docSentiment(id: string, signal?: AbortSignal):
      Promise<{ id: string; sentiment: Triple | null }> {
    return this.get(`/docs/${encodeURIComponent(id)}/sentiment`, signal);
  }

  wordTopics(term: string, signal?: AbortSignal): Promise<WordTopics> {
    return this.get(`/words/${encodeURIComponent(term)}/topics`, signal);
  }

  wordSentiment(term: string, signal?: AbortSignal):
      Promise<{ term: string; overall: Triple | null;
                slices: (Triple | null)[] }> {
    return this.get(`/words/${encodeURIComponent(term)}/sentiment`, signal);
  }

  slices(signal?: AbortSignal): Promise<SlicesPayload> {
    return this.get("/slices", signal);
  }

  embedding(slice: number, signal?: AbortSignal): Promise<EmbeddingSlice> {
    return this.get(`/embedding?slice=${slice}`, signal);
  }
}
