from django.apps import AppConfig


class ModulationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'modulation'
    verbose_name = 'Prediction modulation'
