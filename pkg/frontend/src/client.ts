// Socket wiring: parse incoming frames into the view model, push commands
// out.  The console touches the simulation only through these commands.

import { Command, encodeCommand, parseServerMessage } from "./protocol.js";
import { ViewModel, ingest } from "./viewmodel.js";

export class ConsoleClient {
  private socket: WebSocket | null = null;

  constructor(private view: ViewModel, private onChange: () => void) {}

  connect(url: string): void {
    this.disconnect();
    const socket = new WebSocket(url);
    this.socket = socket;
    socket.onopen = () => {
      this.view.connected = true;
      this.view.toast = null;
      this.onChange();
    };
    socket.onclose = () => {
      this.view.connected = false;
      this.onChange();
    };
    socket.onerror = () => {
      this.view.connected = false;
      this.view.toast = "connection error";
      this.onChange();
    };
    socket.onmessage = (ev) => {
      try {
        ingest(this.view, parseServerMessage(String(ev.data)));
      } catch (err) {
        // malformed frame: keep the last good snapshot, surface a banner
        this.view.toast = `bad frame: ${String(err)}`;
      }
      this.onChange();
    };
  }

  disconnect(): void {
    if (this.socket !== null) {
      this.socket.close();
      this.socket = null;
    }
  }

  send(cmd: Command | null): void {
    if (cmd === null) return;
    if (this.socket === null || this.socket.readyState !== WebSocket.OPEN) {
      this.view.toast = "not connected";
      this.onChange();
      return;
    }
    this.socket.send(encodeCommand(cmd));
  }
}
