from .config_model import (AuditPlan, AuditPlanValidator, SchemeConfig,
                           SchemeConfigValidator, ServerConfig, load_scheme_config,
                           parse_endpoint)
from .limits_model import DEFAULT_LIMITS, Limits
from .report_model import audit_record, export_report_yaml, report_to_dict
