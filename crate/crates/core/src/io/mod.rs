//! File formats and the sweep driver behind the command-line front end.

pub mod channel_file;
pub mod spec;
pub mod sweep;

pub use channel_file::{
    parse_channel, parse_channel_file, parse_inline_channel, parse_input_choice, InputChoice,
};
pub use spec::{
    parse_experiment, parse_experiment_file, parse_settings, parse_settings_file, ExperimentSpec,
    Quantity, Range, SimSection,
};
pub use sweep::{fmt_value, run_sweep, SweepOutput};
