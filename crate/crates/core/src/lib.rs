pub mod gdn;
pub mod interval;
pub mod logs;
pub mod model;
pub mod mtgl;
pub mod oracle;
pub mod shs;
