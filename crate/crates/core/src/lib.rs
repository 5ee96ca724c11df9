pub mod classify;
pub mod solution;
pub mod special;
pub mod spectrum;
pub mod temporal;
pub mod verify;
