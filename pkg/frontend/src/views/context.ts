import type { UiSession } from "../session";

export interface ViewContext {
  session: UiSession;
  onAuthFailure(): void;
}

export interface View {
  root: HTMLElement;
  refresh(): Promise<void>;
}
