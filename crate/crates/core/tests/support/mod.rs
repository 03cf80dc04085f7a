pub mod oracle;
pub mod shapes;
