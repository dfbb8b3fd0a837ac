"""Regenerate the bundled task scripts under src/crdt_coord/scripts."""
import json, random, sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
from crdt_coord.agents.script import TaskScript, TodoSpec, marker_text, scripted_duration_ms, coupling_of

def build(name, coupling, header, todos, footer, outline_ms, seed):
    rng = random.Random(seed)
    lines = list(header)
    for key, desc, body in todos:
        lines.append(marker_text(key, desc))
        lines.append("")
    lines += footer
    skeleton = "\n".join(lines) + "\n"
    specs = tuple(TodoSpec(k, d, b.strip("\n"), scripted_duration_ms(rng, len(b))) for k, d, b in todos)
    s = TaskScript(name, skeleton, specs, coupling, outline_ms).validate()
    print(name, "coupling", coupling, "measured", round(coupling_of(s), 2), "chars", s.total_chars)
    with open(ROOT / "src" / "crdt_coord" / "scripts" / f"{name}.json", "w") as fh:
        json.dump(s.to_dict(), fh, indent=2)
        fh.write("\n")

# ---------------------------------------------------------------- tic-tac-toe (independent pieces)
build("tic-tac-toe", 0.0,
["import React, { useState } from 'react';", "", "type Cell = 'X' | 'O' | null;", ""],
[
("lines", "Winning line table", """
const LINES: number[][] = [
  [0, 1, 2], [3, 4, 5], [6, 7, 8],
  [0, 3, 6], [1, 4, 7], [2, 5, 8],
  [0, 4, 8], [2, 4, 6],
];
"""),
("winner", "Winner detection", """
export function findWinner(cells: Cell[]): Cell {
  const table = [[0, 1, 2], [3, 4, 5], [6, 7, 8], [0, 3, 6], [1, 4, 7], [2, 5, 8], [0, 4, 8], [2, 4, 6]];
  for (const [a, b, c] of table) {
    if (cells[a] && cells[a] === cells[b] && cells[a] === cells[c]) {
      return cells[a];
    }
  }
  return null;
}
"""),
("square", "Square component", """
function Square(props: { value: Cell; onClick: () => void }) {
  return (
    <button className="square" onClick={props.onClick} aria-label={props.value ?? 'empty'}>
      {props.value}
    </button>
  );
}
"""),
("status", "Status banner", """
function StatusBanner(props: { text: string }) {
  return <div className="status" role="status">{props.text}</div>;
}
"""),
("styles", "Board styles", """
const boardStyle: React.CSSProperties = {
  display: 'grid',
  gridTemplateColumns: 'repeat(3, 64px)',
  gap: '4px',
  margin: '16px auto',
};
"""),
("game", "Game component", """
export default function Game() {
  const [cells, setCells] = useState<(string | null)[]>(Array(9).fill(null));
  const [xNext, setXNext] = useState(true);
  const play = (i: number) => {
    if (cells[i]) return;
    const next = cells.slice();
    next[i] = xNext ? 'X' : 'O';
    setCells(next);
    setXNext(!xNext);
  };
  return (
    <div className="game">
      {cells.map((c, i) => (
        <button key={i} onClick={() => play(i)}>{c}</button>
      ))}
    </div>
  );
}
"""),
], [], 3500, 11)

# ---------------------------------------------------------------- registration
build("registration", 0.2,
["import React, { useState } from 'react';", "", "interface FormState { name: string; email: string; password: string; }", ""],
[
("emailCheck", "Email validation", """
function isEmail(value: string): boolean {
  return /^[^\\s@]+@[^\\s@]+\\.[^\\s@]{2,}$/.test(value.trim());
}
"""),
("passwordCheck", "Password strength", """
function passwordScore(pw: string): number {
  let score = 0;
  if (pw.length >= 8) score += 1;
  if (/[A-Z]/.test(pw)) score += 1;
  if (/[0-9]/.test(pw)) score += 1;
  if (/[^A-Za-z0-9]/.test(pw)) score += 1;
  return score;
}
"""),
("errors", "Error list", """
function ErrorList(props: { errors: string[] }) {
  if (props.errors.length === 0) return null;
  return (
    <ul className="errors">
      {props.errors.map((e) => <li key={e}>{e}</li>)}
    </ul>
  );
}
"""),
("submit", "Submit handler", """
async function submitForm(form: FormState): Promise<boolean> {
  const response = await fetch('/api/register', {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(form),
  });
  return response.ok;
}
"""),
("form", "Registration form", """
export default function RegistrationForm() {
  const [form, setForm] = useState<FormState>({ name: '', email: '', password: '' });
  const [errors, setErrors] = useState<string[]>([]);
  const update = (field: keyof FormState) => (e: React.ChangeEvent<HTMLInputElement>) =>
    setForm({ ...form, [field]: e.target.value });
  const onSubmit = async (e: React.FormEvent) => {
    e.preventDefault();
    const found: string[] = [];
    if (!isEmail(form.email)) found.push('Invalid email');
    setErrors(found);
    if (found.length === 0) await submitForm(form);
  };
  return (
    <form onSubmit={onSubmit}>
      <input value={form.name} onChange={update('name')} placeholder="Name" />
      <input value={form.email} onChange={update('email')} placeholder="Email" />
      <input type="password" value={form.password} onChange={update('password')} />
      <ErrorList errors={errors} />
      <button type="submit">Register</button>
    </form>
  );
}
"""),
], [], 4000, 12)

# ---------------------------------------------------------------- markdown
build("markdown", 0.4,
["import React, { useMemo, useState } from 'react';", ""],
[
("escape", "HTML escaping", """
function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}
"""),
("inline", "Inline formatting", """
function renderInline(line: string): string {
  return line
    .replace(/\\*\\*(.+?)\\*\\*/g, '<strong>$1</strong>')
    .replace(/\\*(.+?)\\*/g, '<em>$1</em>')
    .replace(/`(.+?)`/g, '<code>$1</code>')
    .replace(/\\[(.+?)\\]\\((.+?)\\)/g, '<a href="$2">$1</a>');
}
"""),
("blocks", "Block parser", """
function renderMarkdown(source: string): string {
  const out: string[] = [];
  for (const line of source.split('\\n')) {
    const heading = /^(#{1,6})\\s+(.*)$/.exec(line);
    if (heading) {
      const level = heading[1].length;
      out.push(`<h${level}>${renderInline(escapeHtml(heading[2]))}</h${level}>`);
    } else if (line.startsWith('- ')) {
      out.push(`<li>${renderInline(escapeHtml(line.slice(2)))}</li>`);
    } else if (line.trim() !== '') {
      out.push(`<p>${renderInline(escapeHtml(line))}</p>`);
    }
  }
  return out.join('\\n');
}
"""),
("toolbar", "Toolbar", """
function Toolbar(props: { onInsert: (snippet: string) => void }) {
  const items = [['B', '**bold**'], ['I', '*italic*'], ['H', '# Heading'], ['L', '[link](url)']];
  return (
    <div className="toolbar">
      {items.map(([label, snippet]) => (
        <button key={label} onClick={() => props.onInsert(snippet)}>{label}</button>
      ))}
    </div>
  );
}
"""),
("editor", "Split editor", """
export default function MarkdownEditor() {
  const [source, setSource] = useState('# Hello\\n\\nStart *typing*...');
  const html = useMemo(() => renderMarkdown(source), [source]);
  return (
    <div className="editor">
      <Toolbar onInsert={(s) => setSource(source + '\\n' + s)} />
      <textarea value={source} onChange={(e) => setSource(e.target.value)} />
      <div className="preview" dangerouslySetInnerHTML={{ __html: html }} />
    </div>
  );
}
"""),
], [], 4500, 13)

# ---------------------------------------------------------------- pomodoro (formatTime declared twice)
build("pomodoro", 0.6,
["import React, { useEffect, useState } from 'react';", "", "type Phase = 'work' | 'break';", ""],
[
("durations", "Phase durations", """
const WORK_SECONDS = 25 * 60;
const BREAK_SECONDS = 5 * 60;
"""),
("timer", "Countdown hook", """
function useCountdown(running: boolean, initial = WORK_SECONDS) {
  const [left, setLeft] = useState(initial);
  useEffect(() => {
    if (!running) return;
    const id = setInterval(() => setLeft((s) => Math.max(s - 1, 0)), 1000);
    return () => clearInterval(id);
  }, [running]);
  return [left, setLeft] as const;
}
"""),
("display", "Time display", """
function formatTime(seconds: number): string {
  const m = Math.floor(seconds / 60).toString().padStart(2, '0');
  const s = (seconds % 60).toString().padStart(2, '0');
  return `${m}:${s}`;
}

function TimeDisplay(props: { seconds: number; phase: Phase }) {
  return <h1 className={props.phase}>{formatTime(props.seconds)}</h1>;
}
"""),
("history", "Session history", """
function formatTime(seconds: number): string {
  return `${Math.round(seconds / 60)} min`;
}

function History(props: { sessions: number[] }) {
  return (
    <ol className="history">
      {props.sessions.map((s, i) => <li key={i}>{s === BREAK_SECONDS ? 'break' : formatTime(s)}</li>)}
    </ol>
  );
}
"""),
("app", "Pomodoro app", """
export default function Pomodoro() {
  const [phase, setPhase] = useState<Phase>('work');
  const [running, setRunning] = useState(false);
  const [sessions, setSessions] = useState<number[]>([]);
  const [left, setLeft] = useCountdown(running);
  useEffect(() => {
    if (left > 0) return;
    setSessions((all) => [...all, phase === 'work' ? WORK_SECONDS : BREAK_SECONDS]);
    const next = phase === 'work' ? 'break' : 'work';
    setPhase(next);
    setLeft(next === 'work' ? WORK_SECONDS : BREAK_SECONDS);
  }, [left]);
  return (
    <main>
      <TimeDisplay seconds={left} phase={phase} />
      <button onClick={() => setRunning(!running)}>{running ? 'Pause' : 'Start'}</button>
      <History sessions={sessions} />
    </main>
  );
}
"""),
], [], 4000, 14)

# ---------------------------------------------------------------- dashboard
build("dashboard", 0.67,
["import React, { useEffect, useState } from 'react';", "", "interface Metric { label: string; value: number; unit: string; }", ""],
[
("api", "Metrics client", """
async function fetchMetrics(): Promise<Metric[]> {
  const res = await fetch('/api/metrics');
  if (!res.ok) throw new Error(`metrics request failed: ${res.status}`);
  return (await res.json()) as Metric[];
}
"""),
("format", "Value formatting", """
function formatValue(m: Metric): string {
  if (m.value >= 1_000_000) return `${(m.value / 1_000_000).toFixed(1)}M ${m.unit}`;
  if (m.value >= 1_000) return `${(m.value / 1_000).toFixed(1)}k ${m.unit}`;
  return `${m.value} ${m.unit}`;
}
"""),
("card", "Metric card", """
function MetricCard(props: { metric: Metric }) {
  return (
    <div className="card">
      <span className="label">{props.metric.label}</span>
      <strong>{formatValue(props.metric)}</strong>
    </div>
  );
}
"""),
("sparkline", "Sparkline", """
function Sparkline(props: { metrics: Metric[] }) {
  const points = props.metrics.map((m) => m.value);
  const max = Math.max(...points, 1);
  const path = points.map((p, i) => `${i * 10},${40 - (p / max) * 40}`).join(' ');
  const last = props.metrics[props.metrics.length - 1];
  return (
    <svg width={points.length * 10} height={40}>
      <title>{last ? formatValue(last) : 'no data'}</title>
      <polyline points={path} fill="none" />
    </svg>
  );
}
"""),
("poll", "Polling hook", """
function formatValue(m: Metric): string {
  return m.value.toFixed(2);
}

function useMetrics(intervalMs: number): Metric[] {
  const [metrics, setMetrics] = useState<Metric[]>([]);
  useEffect(() => {
    let alive = true;
    const load = () => fetchMetrics().then((m) => alive && setMetrics(m)).catch(() => undefined);
    load();
    const id = setInterval(load, intervalMs);
    return () => { alive = false; clearInterval(id); };
  }, [intervalMs]);
  return metrics;
}
"""),
("page", "Dashboard page", """
export default function Dashboard() {
  const metrics = useMetrics(5000);
  return (
    <section className="dashboard">
      {metrics.map((m) => <MetricCard key={m.label} metric={m} />)}
      <Sparkline metrics={metrics} />
    </section>
  );
}
"""),
], [], 4500, 15)

# ---------------------------------------------------------------- visualizer
build("visualizer", 0.83,
["import React, { useEffect, useRef, useState } from 'react';", "", "type Step = { array: number[]; active: [number, number] };", ""],
[
("random", "Random input", """
function randomArray(n: number, max = 100): number[] {
  return Array.from({ length: n }, () => Math.floor(Math.random() * max) + 1);
}

function swap(a: number[], i: number, j: number): void {
  [a[i], a[j]] = [a[j], a[i]];
}

function maxValue(a: number[]): number {
  return a.reduce((m, v) => (v > m ? v : m), 1);
}
"""),
("bubble", "Bubble sort steps", """
function bubbleSteps(input: number[]): Step[] {
  const a = input.slice();
  const steps: Step[] = [];
  for (let i = 0; i < a.length; i++) {
    for (let j = 0; j < a.length - i - 1; j++) {
      if (a[j] > a[j + 1]) swap(a, j, j + 1);
      steps.push({ array: a.slice(), active: [j, j + 1] });
    }
  }
  return steps;
}
"""),
("quick", "Quick sort steps", """
function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

function quickSteps(input: number[]): Step[] {
  const a = input.slice();
  const steps: Step[] = [];
  const sort = (lo: number, hi: number) => {
    if (lo >= hi) return;
    const pivot = a[clamp(hi, 0, a.length - 1)];
    let i = lo;
    for (let j = lo; j < hi; j++) {
      if (a[j] < pivot) { swap(a, i, j); i++; }
      steps.push({ array: a.slice(), active: [i, j] });
    }
    swap(a, i, hi);
    sort(lo, i - 1);
    sort(i + 1, hi);
  };
  sort(0, a.length - 1);
  return steps;
}
"""),
("bars", "Bar renderer", """
function clamp(v: number, lo: number, hi: number): number {
  return v < lo ? lo : v > hi ? hi : v;
}

function Bars(props: { step: Step }) {
  return (
    <div className="bars">
      {props.step.array.map((v, i) => (
        <div key={i} className={props.step.active.includes(i) ? 'bar active' : 'bar'}
             style={{ height: `${clamp((v / maxValue(props.step.array)) * 100, 1, 100)}%` }} />
      ))}
    </div>
  );
}
"""),
("player", "Playback hook", """
function usePlayback(steps: Step[], speedMs: number) {
  const [index, setIndex] = useState(0);
  const timer = useRef<number | undefined>(undefined);
  useEffect(() => {
    timer.current = window.setInterval(() => setIndex((i) => clamp(i + 1, 0, steps.length - 1)), speedMs);
    return () => window.clearInterval(timer.current);
  }, [steps, speedMs]);
  return steps[index];
}
"""),
("app", "Visualizer app", """
export default function Visualizer() {
  const [algo, setAlgo] = useState<'bubble' | 'quick'>('bubble');
  const [input] = useState(() => randomArray(32));
  const steps = algo === 'bubble' ? bubbleSteps(input) : quickSteps(input);
  const step = usePlayback(steps, 30);
  return (
    <div>
      <select value={algo} onChange={(e) => setAlgo(e.target.value as 'bubble' | 'quick')}>
        <option value="bubble">Bubble</option>
        <option value="quick">Quick</option>
      </select>
      {step && <Bars step={step} />}
    </div>
  );
}
"""),
], [], 5000, 16)
