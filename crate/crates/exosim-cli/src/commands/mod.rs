pub mod calibrate_muscle;
pub mod calibrate_sensor;
pub mod emg;
pub mod simulate;
pub mod sweep;
