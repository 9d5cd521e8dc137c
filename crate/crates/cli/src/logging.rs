//! stderr logging: plain text by default, one JSON object per record with
//! `--log-json`. The level comes from `RUST_LOG` (default `warn`).

use std::io::Write;

use env_logger::{Builder, Env};

pub fn init(json: bool) {
    let mut builder = Builder::from_env(Env::default().default_filter_or("warn"));
    if json {
        builder.format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    } else {
        builder.format(|buf, record| {
            writeln!(
                buf,
                "{}: {}",
                record.level().as_str().to_ascii_lowercase(),
                record.args()
            )
        });
    }
    builder.init();
}
