/** Feature-engineering workbench driving the session rounds API.
 *
 * All rendered state is a pure function of confirmed server responses
 * plus the locally marked words; there is no optimistic update, and at
 * most one round submission is in flight at a time. A page reload
 * reconstructs an identical workbench from GET /api/sessions/{id}.
 */

import {
  ApiClient,
  RetrainInProgressError,
} from './client.ts';
import type { RoundJson, SessionJson } from './types.ts';

export type SubmitOutcome =
  | { kind: 'round'; round: RoundJson }
  | { kind: 'busy'; message: string };

export class Workbench {
  private marks = new Set<string>();
  private submitting = false;

  constructor(
    private readonly client: ApiClient,
    private session: SessionJson
  ) {}

  /** Rebuild the workbench purely from the server's session document. */
  static async load(client: ApiClient, sessionId: string): Promise<Workbench> {
    return new Workbench(client, await client.getSession(sessionId));
  }

  get sessionId(): string {
    return this.session.id;
  }

  currentRound(): RoundJson {
    const round = this.session.rounds[this.session.rounds.length - 1];
    if (!round) throw new Error('session has no rounds');
    return round;
  }

  /** Words a user may mark: those visible in the current explanations. */
  visibleWords(): Set<string> {
    const words = new Set<string>();
    for (const exp of this.currentRound().picked) {
      for (const f of exp.features) words.add(f.token);
    }
    return words;
  }

  markedWords(): string[] {
    return [...this.marks].sort();
  }

  /** Mark a word for removal; only currently visible words qualify. */
  markWord(word: string): boolean {
    if (!this.visibleWords().has(word)) return false;
    this.marks.add(word);
    return true;
  }

  unmarkWord(word: string): void {
    this.marks.delete(word);
  }

  /** Held-out accuracy per round, oldest first, for the sparkline. */
  accuracySparkline(): number[] {
    return this.session.rounds.map((r) => r.metrics.heldout_acc);
  }

  removedWords(): string[] {
    return this.currentRound().removed_words_cumulative;
  }

  /** Submit the marked words as a round; marks clear only on success. */
  async submitRound(): Promise<SubmitOutcome> {
    if (this.submitting) {
      return { kind: 'busy', message: 'retraining in progress' };
    }
    this.submitting = true;
    try {
      const round = await this.client.submitRound(
        this.session.id,
        this.markedWords()
      );
      this.session.rounds.push(round);
      this.marks.clear();
      return { kind: 'round', round };
    } catch (err) {
      if (err instanceof RetrainInProgressError) {
        return { kind: 'busy', message: 'retraining in progress' };
      }
      throw err;
    } finally {
      this.submitting = false;
    }
  }

  /** Replace local state with the server's view of the session. */
  async refresh(): Promise<void> {
    this.session = await this.client.getSession(this.session.id);
  }

  snapshot(): SessionJson {
    return this.session;
  }
}
