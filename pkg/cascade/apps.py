from django.apps import AppConfig


class CascadeConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'cascade'
    verbose_name = 'Cascaded OPO'
