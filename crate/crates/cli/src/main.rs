use std::io::Write;
use std::process::ExitCode;

use mkc_lab::config::RunConfig;
use mkc_lab::report::emit_report;
use mkc_lab::run::run;

fn main() -> ExitCode {
    let config = match RunConfig::parse_from(std::env::args_os()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut out = std::io::stdout().lock();
    if out.write_all(emit_report(&report, config.format).as_bytes()).and_then(|_| out.flush()).is_err() {
        return ExitCode::from(1);
    }
    if let Some(d) = report.duration {
        eprintln!("{} finished in {:.2?}", config.experiment.name(), d);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
