/** FIFO work queue with at most one in-flight task per endpoint key. */

type Task<T> = () => Promise<T>;

export class EndpointQueue {
  private chains = new Map<string, Promise<unknown>>();
  private depths = new Map<string, number>();

  /** Number of queued-or-running tasks for an endpoint. */
  pending(key: string): number {
    return this.depths.get(key) ?? 0;
  }

  enqueue<T>(key: string, task: Task<T>): Promise<T> {
    const prev = this.chains.get(key) ?? Promise.resolve();
    this.depths.set(key, this.pending(key) + 1);
    const next = prev
      .catch(() => undefined) // one failed probe must not block the queue
      .then(task)
      .finally(() => {
        this.depths.set(key, this.pending(key) - 1);
      });
    this.chains.set(key, next);
    return next;
  }
}
