//! Argument parsing: newline-separated argv must parse or fail cleanly, and
//! anything that parses must validate.
#![no_main]

use libfuzzer_sys::fuzz_target;
use mkc_lab::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let argv = std::iter::once("mkc-lab").chain(text.split('\n'));
    if let Ok(config) = RunConfig::parse_from(argv) {
        assert!(config.epsilon > 0.0 && config.epsilon <= 0.1);
        assert_ne!(config.parallel, Some(0));
        let _ = config.echo();
    }
});
