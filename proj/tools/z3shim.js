#!/usr/bin/env node
// SPDX-License-Identifier: MIT
//
// Thin SMT-LIB pipe server around the WASM build of Z3 (npm `z3-solver`).
// Reads SMT-LIB text from stdin; a line consisting of `;APC_EOQ` triggers
// evaluation of everything buffered so far; the evaluation output is written
// to stdout. Callers detect completion via an `(echo "...")` marker they
// append themselves, so the same wire protocol works against a native
// `z3 -in` (which treats the `;APC_EOQ` trigger line as a comment).
'use strict';

const readline = require('readline');
const { init } = require('z3-solver');

(async () => {
    const { Z3 } = await init();
    const cfg = Z3.mk_config();
    const ctx = Z3.mk_context(cfg);

    const rl = readline.createInterface({ input: process.stdin, terminal: false });
    let buf = [];
    let chain = Promise.resolve();

    rl.on('line', (line) => {
        if (line.trim() === ';APC_EOQ') {
            const script = buf.join('\n');
            buf = [];
            chain = chain.then(async () => {
                // The WASM evaluator is asyncify-based; servicing stdin events
                // while it is suspended can desync its parser state. Hold
                // input until the evaluation fully completes.
                rl.pause();
                let out;
                try {
                    out = await Z3.eval_smtlib2_string(ctx, script);
                } catch (e) {
                    out = '(error "' + String(e).replace(/"/g, "'") + '")\nAPC_DONE\n';
                } finally {
                    rl.resume();
                }
                process.stdout.write(out.endsWith('\n') ? out : out + '\n');
            });
        } else {
            buf.push(line);
        }
    });
    rl.on('close', () => {
        chain.then(() => process.exit(0));
    });
})().catch((e) => {
    process.stderr.write(String(e) + '\n');
    process.exit(1);
});
