/**
 * Process-boundary plumbing: every call into the native pipeline goes
 * through its CLI (`python -m fisheyeaug`), exchanging rasters as PNG
 * files and remap tables in the FRMP binary format.
 */

import { spawnSync } from 'node:child_process'
import { mkdtempSync, rmSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'

/** Error from the native tool; carries its exit code and stderr text. */
export class NativeError extends Error {
  readonly exitCode: number

  constructor(message: string, exitCode: number) {
    super(message)
    this.name = 'NativeError'
    this.exitCode = exitCode
  }
}

function pythonCommand(): string[] {
  const override = process.env.FISHEYEAUG_PYTHON
  if (override) return [override, '-m', 'fisheyeaug']
  return ['python3', '-m', 'fisheyeaug']
}

/** Run one CLI subcommand; throws NativeError on nonzero exit. */
export function runNative(args: string[]): string {
  const [cmd, ...prefix] = pythonCommand()
  const result = spawnSync(cmd, [...prefix, ...args], {
    encoding: 'utf-8',
    maxBuffer: 64 * 1024 * 1024,
  })
  if (result.error) {
    throw new NativeError(`failed to launch ${cmd}: ${result.error.message}`, -1)
  }
  if (result.status !== 0) {
    const detail = (result.stderr || result.stdout || '').trim()
    throw new NativeError(
      `fisheyeaug ${args[0]} exited with code ${result.status}: ${detail}`,
      result.status ?? -1,
    )
  }
  return result.stdout
}

export function nativeVersion(): string {
  return runNative(['--version']).trim()
}

/** Scratch directory for one call; removed in the finally block. */
export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), 'fisheyeaug-'))
  try {
    return fn(dir)
  } finally {
    rmSync(dir, { recursive: true, force: true })
  }
}
